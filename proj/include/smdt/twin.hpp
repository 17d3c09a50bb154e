#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "smdt/network.hpp"

namespace smdt {

enum class SourceKind { kRsu = 0, kCav = 1 };

/// Ordering puts every RSU before every CAV, then ascending id; this is the
/// order in which same-step observations are applied (last writer wins).
struct SourceId {
  SourceKind kind = SourceKind::kRsu;
  int id = 0;
  auto operator<=>(const SourceId&) const = default;
};

struct Coverage {
  std::set<NodeId> nodes;
  std::set<LinkId> links;
};

struct SensingSource {
  SourceId id;
  Coverage coverage;
};

/// Nodes within `radius_m` of the RSU's node and links whose segment passes
/// within `radius_m` of it.
Coverage rsu_coverage(const TrafficNetwork& net, NodeId at, double radius_m);

/// A CAV senses the link it occupies and the intersection at its end.
Coverage cav_coverage(const TrafficNetwork& net, LinkId current);

struct LinkObservation {
  LinkId link;
  double volume = 0.0;
  double speed_mps = 0.0;
  bool occupied = false;
};

struct NodeObservation {
  NodeId node;
  double ped_density = 0.0;
};

struct Observation {
  double time_s = 0.0;
  std::vector<LinkObservation> links;
  std::vector<NodeObservation> nodes;
};

struct EventThresholds {
  double d_thre = 0.5;             // persons / m^2
  double v_thre = 0.5;             // m/s
  double accident_window_s = 10.0;

  /// Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

struct SpeedSample {
  double time_s;
  double speed_mps;
  bool occupied;
};

/// Cloud-side snapshot of the traffic state. A value type: copies are cheap
/// enough to hand to the planner, and the network is shared immutably.
class TwinState {
 public:
  TwinState() = default;
  /// `thresholds.accident_window_s` also fixes how much speed history is kept.
  explicit TwinState(std::shared_ptr<const TrafficNetwork> net, EventThresholds thresholds = {});

  const TrafficNetwork& network() const { return *net_; }

  /// Applies a delivered observation (or validates and drops an undelivered
  /// one). Elements older than their last update are ignored.
  /// Throws ContractViolation for elements outside the source's coverage.
  void ingest(const SensingSource& source, const Observation& obs, bool delivered);

  /// Re-evaluates detection and updates N_eve / L_eve. An element leaves the
  /// sets once a delivered observation no longer meets its criterion.
  void update_events();

  const EventThresholds& thresholds() const { return thresholds_; }

  double volume(LinkId l) const { return volumes_.at(static_cast<std::size_t>(l.value)); }
  std::optional<double> ped_density(NodeId n) const;
  std::optional<double> window_min_speed(LinkId l) const;
  const std::deque<SpeedSample>& speed_window(LinkId l) const {
    return windows_.at(static_cast<std::size_t>(l.value));
  }

  const std::set<NodeId>& event_nodes() const { return n_eve_; }
  const std::set<LinkId>& event_links() const { return l_eve_; }

  std::optional<double> last_update(SourceId s) const;
  std::optional<double> element_update(LinkId l) const;
  std::optional<double> element_update(NodeId n) const;

 private:
  std::shared_ptr<const TrafficNetwork> net_;
  std::vector<double> volumes_;
  std::vector<std::optional<double>> densities_;
  EventThresholds thresholds_;
  std::vector<std::deque<SpeedSample>> windows_;
  std::vector<std::optional<double>> link_stamp_;
  std::vector<std::optional<double>> node_stamp_;
  std::map<SourceId, double> source_stamp_;
  std::set<LinkId> accident_links_;
  std::set<NodeId> n_eve_;
  std::set<LinkId> l_eve_;
};

/// Functional form of TwinState::ingest.
TwinState ingest_observation(TwinState state, const SensingSource& source, const Observation& obs,
                             bool delivered);

/// Nodes whose latest observed pedestrian density strictly exceeds d_thre.
std::set<NodeId> detect_pedestrian_gathering(const TwinState& state, const EventThresholds& thresholds);

/// Links whose observed speed stayed strictly below v_thre, with at least one
/// vehicle present, across a full accident window; plus intersections where
/// two or more approaches are stalled that way.
std::pair<std::set<NodeId>, std::set<LinkId>> detect_accident(const TwinState& state,
                                                              const EventThresholds& thresholds);

/// Last-known volume per link (0 for links never observed).
std::vector<double> twin_volumes(const TwinState& state, const TrafficNetwork& net);

/// One journal record for the twin-journal output.
Json twin_snapshot_json(const TwinState& state, long long step, double time_s);

}  // namespace smdt
