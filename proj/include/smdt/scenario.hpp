#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "smdt/comms.hpp"
#include "smdt/network.hpp"
#include "smdt/twin.hpp"

namespace smdt {

enum class EventKind { kAccident, kPedestrianGathering };

const char* to_string(EventKind kind);

/// A ground-truth incident. Accidents sit on a link, gatherings on a node.
struct ScheduledEvent {
  EventKind kind = EventKind::kAccident;
  std::optional<LinkId> link;
  std::optional<NodeId> node;
  long long onset_step = 0;
  /// First step at which the event is over; nullopt keeps it active to the end.
  std::optional<long long> end_step;
};

/// Events drawn at run start: locations uniform without replacement over
/// links (accidents) or nodes (gatherings), kind uniform over `kinds`, onset
/// uniform over [onset_min_s, onset_max_s].
struct RandomEvents {
  int count = 0;
  std::vector<EventKind> kinds{EventKind::kAccident, EventKind::kPedestrianGathering};
  double onset_min_s = 0.0;
  /// Defaults to half the horizon when unset.
  std::optional<double> onset_max_s;
  std::optional<double> duration_s;
};

struct RsuPlacement {
  NodeId node;
  double radius_m = 30.0;
};

struct SimulationScenario {
  std::shared_ptr<const TrafficNetwork> network;
  double dt_s = 1.0;
  double t_sim_s = 600.0;
  std::uint64_t seed = 1;

  int n_vel = 300;
  double p_user = 0.167;
  /// Spawning is Poisson with rate n_vel / (spawn_horizon_fraction * steps).
  double spawn_horizon_fraction = 0.8;

  std::vector<ScheduledEvent> events;
  std::optional<RandomEvents> events_random;

  std::vector<RsuPlacement> rsus;
  /// Senses every node and link each step (used to check twin fidelity).
  bool full_coverage = false;

  EventThresholds thresholds;
  LatencyModel latency = LatencyModel::field_measured();
  ServiceLatencyMode service_mode = ServiceLatencyMode::kTwoWayV2c;

  double background_ped_density = 0.05;
  double gathering_ped_density = 1.0;

  long long steps() const;
  double spawn_rate_per_step() const;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

/// Reads a scenario file. `network_file` is resolved against the scenario's
/// directory; `network_generate` builds a grid network instead.
SimulationScenario load_scenario(const std::filesystem::path& path);
SimulationScenario parse_scenario(const JsonNode& root, const std::filesystem::path& base_dir);

}  // namespace smdt
