#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "smdt/json_source.hpp"

namespace smdt {

/// Integer identifier with a phantom tag so node and link ids don't mix.
template <class Tag>
struct Id {
  int value = 0;
  constexpr auto operator<=>(const Id&) const = default;
};

/// Node ids are dense and 1-based (1..M).
using NodeId = Id<struct NodeTag>;
/// Link ids are dense and 0-based indices into TrafficNetwork::links().
using LinkId = Id<struct LinkTag>;

struct Point {
  double x_m = 0.0;
  double y_m = 0.0;
};

struct Node {
  NodeId id;
  Point position;
};

struct Link {
  NodeId from;
  NodeId to;
  double length_m = 0.0;
  double v_free_mps = 0.0;
  double k_max_veh_per_m = 0.0;

  /// Vehicles the link holds at jam density.
  double jam_vehicles() const { return k_max_veh_per_m * length_m; }
};

/// Directed road graph G = (N, L). Immutable once built; the constructor
/// rejects dangling endpoints, self-links, parallel links and non-positive
/// link attributes.
class TrafficNetwork {
 public:
  TrafficNetwork() = default;
  TrafficNetwork(std::vector<Node> nodes, std::vector<Link> links);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int link_count() const { return static_cast<int>(links_.size()); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }

  bool contains(NodeId n) const { return n.value >= 1 && n.value <= node_count(); }
  bool contains(LinkId l) const { return l.value >= 0 && l.value < link_count(); }

  const Node& node(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n.value - 1)); }
  const Link& link(LinkId l) const { return links_.at(static_cast<std::size_t>(l.value)); }

  std::optional<LinkId> find_link(NodeId from, NodeId to) const;

  const std::vector<LinkId>& outgoing(NodeId n) const { return out_.at(static_cast<std::size_t>(n.value - 1)); }
  const std::vector<LinkId>& incoming(NodeId n) const { return in_.at(static_cast<std::size_t>(n.value - 1)); }

 private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::vector<LinkId>> in_;
};

/// Link traversal time in seconds with a dedicated +inf state. Addition
/// saturates at +inf; comparisons order +inf after every finite time.
class JourneyTime {
 public:
  constexpr JourneyTime() = default;

  static constexpr JourneyTime infinite() { return JourneyTime(); }
  static JourneyTime seconds(double s);

  constexpr bool is_infinite() const { return s_ == kInf; }
  constexpr bool is_finite() const { return s_ != kInf; }
  /// Seconds, or std::numeric_limits<double>::infinity() for +inf.
  constexpr double value() const { return s_; }

  friend constexpr JourneyTime operator+(JourneyTime a, JourneyTime b) {
    JourneyTime r;
    r.s_ = (a.is_infinite() || b.is_infinite()) ? kInf : a.s_ + b.s_;
    return r;
  }
  constexpr JourneyTime& operator+=(JourneyTime o) { return *this = *this + o; }
  constexpr auto operator<=>(const JourneyTime&) const = default;

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double s_ = kInf;
};

/// M x M node-to-node journey times, indexed by NodeId. Entries default to +inf.
class JourneyTimeMatrix {
 public:
  JourneyTimeMatrix() = default;
  explicit JourneyTimeMatrix(int node_count);

  int size() const { return m_; }

  JourneyTime operator()(NodeId from, NodeId to) const { return cells_[index(from, to)]; }
  void set(NodeId from, NodeId to, JourneyTime t) { cells_[index(from, to)] = t; }

  bool operator==(const JourneyTimeMatrix&) const = default;

 private:
  std::size_t index(NodeId from, NodeId to) const;

  int m_ = 0;
  std::vector<JourneyTime> cells_;
};

/// Speeds below this are treated as a stopped link (journey time +inf).
inline constexpr double kStallSpeedMps = 1e-6;

/// Vehicles per meter. Throws InvalidLinkError when length_m <= 0.
double traffic_density(double vehicles, double length_m);

/// Linear density-speed law v_free * (1 - k / k_max), clamped at 0.
double journey_speed(double density, double v_free_mps, double k_max_veh_per_m);

/// Traversal time of `link` carrying `vehicles`; +inf once the speed stalls.
JourneyTime journey_time(const Link& link, double vehicles);

/// Snapshot matrix for per-link volumes (one entry per link, by LinkId).
/// Throws ConfigError on a length mismatch.
JourneyTimeMatrix build_journey_matrix(const TrafficNetwork& net, std::span<const double> volumes);

/// Network file I/O. Speeds may be given as v_free_mps or v_free_kmh.
TrafficNetwork parse_network(const JsonNode& root);
TrafficNetwork load_network(const std::filesystem::path& path);
Json network_to_json(const TrafficNetwork& net);

struct GridNetworkOptions {
  int rows = 9;
  int cols = 10;
  /// Total directed links; grid neighbours first, then random diagonals.
  int target_links = 504;
  double spacing_m = 150.0;
  double jitter_m = 25.0;
  /// Every `arterial_every`-th row and column is an arterial.
  int arterial_every = 3;
  double arterial_kmh = 50.0;
  double local_kmh = 30.0;
  double arterial_k_max = 0.30;
  double local_k_max = 0.15;
  std::uint64_t seed = 1;
};

/// Deterministic jittered grid with bidirectional streets and extra diagonal
/// shortcuts; the defaults give 90 nodes and 504 links.
TrafficNetwork generate_grid_network(const GridNetworkOptions& options);

}  // namespace smdt
