#pragma once

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "smdt/nav.hpp"
#include "smdt/rng.hpp"
#include "smdt/scenario.hpp"
#include "smdt/twin.hpp"

namespace smdt {

enum class VehicleClass { kCavUser, kUnconnected };
enum class VehicleState { kMoving, kQueued, kArrived };

struct Vehicle {
  int id = 0;
  VehicleClass cls = VehicleClass::kUnconnected;
  NodeId origin;
  NodeId destination;
  /// Empty until the cloud (CAV) or the driver (unconnected) picks a route.
  Route route;
  std::optional<LinkId> link;
  double position_m = 0.0;
  VehicleState state = VehicleState::kQueued;
  long long entry_step = 0;
  std::optional<long long> arrival_step;
  int events_encountered = 0;
  bool blocked = false;
  /// Scenario event ids already counted for this vehicle.
  std::set<int> encountered;

  bool routed() const { return !route.nodes.empty(); }
};

/// An incident currently present in the ground truth.
struct ActiveEvent {
  int id = 0;
  EventKind kind = EventKind::kAccident;
  std::optional<LinkId> link;
  std::optional<NodeId> node;

  /// Links on which traffic is stopped by this event.
  std::vector<LinkId> closed_links(const TrafficNetwork& net) const;
};

/// Counts each (vehicle, event) pair once, when the vehicle sits on a link the
/// event closes; a vehicle stopped there is marked blocked.
Vehicle record_encounter(Vehicle vehicle, const TrafficNetwork& net, std::span<const ActiveEvent> events);

/// Shortest route by link length, with the planner's tie-breaking. Returns
/// nullopt when `end` is unreachable; throws DegenerateRequestError if start == end.
std::optional<Route> shortest_distance_route(const TrafficNetwork& net, NodeId start, NodeId end);

struct ClassMetrics {
  int spawned = 0;
  int completed = 0;
  /// Mean over completed vehicles; empty when none completed.
  std::optional<double> mean_travel_time_s;
  /// Mean over spawned vehicles; empty when none spawned.
  std::optional<double> mean_encounters;
  std::optional<double> blocking_probability;
};

struct MetricsSummary {
  ClassMetrics cav;
  ClassMetrics unconnected;
  ClassMetrics overall;
};

MetricsSummary summarize(std::span<const Vehicle> vehicles, double dt_s);

/// Header and row of metrics.csv (nine metric columns).
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsSummary& m);

struct RunOptions {
  std::ostream* twin_journal = nullptr;
  std::ostream* routes_journal = nullptr;
};

/// Discrete-time mesoscopic engine. Each step: spawn, toggle events, sense and
/// ingest into the twin, detect, plan in the cloud, move vehicles, count.
class Simulator {
 public:
  explicit Simulator(SimulationScenario scenario, RunOptions options = {});

  void step();
  bool finished() const { return step_ >= scenario_.steps(); }
  long long current_step() const { return step_; }

  const SimulationScenario& scenario() const { return scenario_; }
  const TrafficNetwork& network() const { return *scenario_.network; }
  const TwinState& twin() const { return twin_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const std::vector<ScheduledEvent>& schedule() const { return schedule_; }
  const std::vector<ActiveEvent>& active_events() const { return active_; }
  const std::set<LinkId>& closed_links() const { return closed_; }
  /// Per-link vehicle counts at the last sensing instant.
  const std::vector<double>& sampled_counts() const { return sampled_counts_; }
  int link_occupancy(LinkId l) const { return static_cast<int>(queues_.at(static_cast<std::size_t>(l.value)).size()); }

  MetricsSummary metrics() const { return summarize(vehicles_, scenario_.dt_s); }

 private:
  void place_random_events();
  void spawn();
  void toggle_events();
  void sense();
  void plan();
  void move();
  void count_encounters();

  double link_speed(LinkId l) const;
  bool can_enter(LinkId l) const;
  void enter_link(Vehicle& v, LinkId l, double position_m);
  double time_to_intersection(const Vehicle& v) const;
  void apply_route(Vehicle& v, const Route& planned);
  std::optional<Route> unconnected_route(NodeId from, NodeId to);

  SimulationScenario scenario_;
  RunOptions options_;
  long long step_ = 0;

  Rng spawn_rng_;
  Rng class_rng_;
  Rng od_rng_;
  Rng ssms_rng_;
  Rng info_rng_;
  Rng svc_rng_;

  std::vector<ScheduledEvent> schedule_;
  std::vector<ActiveEvent> active_;
  std::set<LinkId> closed_;

  std::vector<SensingSource> rsu_sources_;
  TwinState twin_;

  std::vector<Vehicle> vehicles_;
  int spawned_ = 0;
  std::vector<std::deque<int>> queues_;    // per link, front is furthest ahead
  std::vector<std::deque<int>> waiting_;   // per node, vehicles not yet on a link
  std::vector<int> pending_cav_;           // CAVs awaiting an initial route
  std::vector<double> sampled_counts_;
  std::map<std::pair<int, int>, std::optional<Route>> shortest_cache_;
};

/// Runs a scenario to completion.
MetricsSummary run(const SimulationScenario& scenario, const RunOptions& options = {});

}  // namespace smdt
