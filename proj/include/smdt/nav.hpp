#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "smdt/network.hpp"

namespace smdt {

/// Node sequence assigned to one vehicle. `cursor` is the index of the node
/// the vehicle is standing at or driving towards; links from the cursor on
/// are still ahead of it. A freshly planned route has cursor 0.
struct Route {
  int vehicle = 0;
  std::vector<NodeId> nodes;
  std::size_t cursor = 0;

  NodeId position() const { return nodes.at(cursor); }
  NodeId destination() const { return nodes.back(); }
  /// (from, to) pairs still ahead of the vehicle.
  std::vector<std::pair<NodeId, NodeId>> remaining_links() const;

  bool operator==(const Route&) const = default;
};

struct Path {
  std::vector<NodeId> nodes;
  JourneyTime cost;
};

/// Minimum-cost node sequence over the finite matrix entries. Ties resolve to
/// the lower-numbered predecessor. Returns nullopt when `end` is unreachable.
/// Throws DegenerateRequestError when start == end.
std::optional<Path> dijkstra_fastest(const JourneyTimeMatrix& journey, NodeId start, NodeId end);

/// Sets every entry pointing into an event node, and every event link, to +inf.
JourneyTimeMatrix mask_events(JourneyTimeMatrix journey, const TrafficNetwork& net,
                              const std::set<NodeId>& event_nodes, const std::set<LinkId>& event_links);

struct PlanningUser {
  int vehicle = 0;
  NodeId position;
  NodeId destination;
};

struct PlanningInput {
  const TrafficNetwork* network = nullptr;
  /// Journey times with events already masked in.
  JourneyTimeMatrix journey;
  std::vector<PlanningUser> users;
  std::vector<PlanningUser> new_users;
  std::set<NodeId> event_nodes;
  std::set<LinkId> event_links;
};

struct PlanOutcome {
  std::map<int, Route> routes;
  /// Vehicles for which every path is masked; they keep what they had.
  std::set<int> unreachable;
};

/// Fastest route for every entering user.
PlanOutcome plan_new_users(const PlanningInput& input);

/// Re-plans users whose remaining route crosses a +inf entry. Output routes
/// start at the user's current position node (cursor 0).
PlanOutcome replan_affected(const PlanningInput& input, const std::map<int, Route>& routes);

enum class PlanReason { kNew, kReplan };

struct PlannedRoute {
  Route route;
  PlanReason reason;
};

struct CooperativePlan {
  std::map<int, PlannedRoute> routes;
  std::set<int> unreachable;
  JourneyTimeMatrix masked;
};

/// One cloud planning round: mask events, route entering users, then
/// re-plan existing users whose routes now cross an event.
CooperativePlan cooperative_plan(const TrafficNetwork& net, const JourneyTimeMatrix& journey,
                                 const std::set<NodeId>& event_nodes, const std::set<LinkId>& event_links,
                                 const std::vector<PlanningUser>& new_users, const std::map<int, Route>& routes);

/// Comfortable deceleration recommended by ITE (10 ft/s^2).
inline constexpr double kComfortDecelMps2 = 3.048;
/// v^2 / (2 a_comfy) rounded to the coefficient used for the latency deadline.
inline constexpr double kRequestDistanceCoeff = 0.164;

/// Distance before an intersection at which a CAV asks the cloud for a route.
double request_distance(double v_free_mps);

Json route_journal_json(long long step, const Route& route, PlanReason reason);

}  // namespace smdt
