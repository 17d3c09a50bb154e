#include "smdt/nav.hpp"

#include <algorithm>
#include <queue>

#include <fmt/format.h>

#include "smdt/error.hpp"

namespace smdt {

std::vector<std::pair<NodeId, NodeId>> Route::remaining_links() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (std::size_t i = cursor; i + 1 < nodes.size(); ++i) out.emplace_back(nodes[i], nodes[i + 1]);
  return out;
}

std::optional<Path> dijkstra_fastest(const JourneyTimeMatrix& journey, NodeId start, NodeId end) {
  const int m = journey.size();
  if (start.value < 1 || start.value > m || end.value < 1 || end.value > m) {
    throw ContractViolation(fmt::format("route request {} -> {} outside 1..{}", start.value, end.value, m));
  }
  if (start == end) throw DegenerateRequestError(fmt::format("start and end are both node {}", start.value));

  const auto idx = [](NodeId n) { return static_cast<std::size_t>(n.value - 1); };
  std::vector<JourneyTime> dist(static_cast<std::size_t>(m));
  std::vector<int> pred(static_cast<std::size_t>(m), 0);
  std::vector<bool> done(static_cast<std::size_t>(m), false);

  using Entry = std::pair<JourneyTime, int>;  // (cost, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[idx(start)] = JourneyTime::seconds(0.0);
  queue.emplace(dist[idx(start)], start.value);

  while (!queue.empty()) {
    auto [cost, u] = queue.top();
    queue.pop();
    NodeId un{u};
    if (done[idx(un)]) continue;
    done[idx(un)] = true;
    if (un == end) break;
    for (int v = 1; v <= m; ++v) {
      NodeId vn{v};
      JourneyTime w = journey(un, vn);
      if (w.is_infinite() || done[idx(vn)]) continue;
      JourneyTime alt = cost + w;
      auto& best = dist[idx(vn)];
      if (alt < best) {
        best = alt;
        pred[idx(vn)] = u;
        queue.emplace(alt, v);
      } else if (alt == best && u < pred[idx(vn)]) {
        pred[idx(vn)] = u;
      }
    }
  }
  if (dist[idx(end)].is_infinite()) return std::nullopt;

  Path path{{}, dist[idx(end)]};
  for (NodeId n = end; n != start; n = NodeId{pred[idx(n)]}) path.nodes.push_back(n);
  path.nodes.push_back(start);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

JourneyTimeMatrix mask_events(JourneyTimeMatrix journey, const TrafficNetwork& net,
                              const std::set<NodeId>& event_nodes, const std::set<LinkId>& event_links) {
  for (NodeId n : event_nodes) {
    for (int from = 1; from <= journey.size(); ++from) {
      if (journey(NodeId{from}, n).is_finite()) journey.set(NodeId{from}, n, JourneyTime::infinite());
    }
  }
  for (LinkId l : event_links) {
    const Link& link = net.link(l);
    journey.set(link.from, link.to, JourneyTime::infinite());
  }
  return journey;
}

PlanOutcome plan_new_users(const PlanningInput& input) {
  PlanOutcome out;
  for (const auto& u : input.new_users) {
    auto path = dijkstra_fastest(input.journey, u.position, u.destination);
    if (!path) {
      out.unreachable.insert(u.vehicle);
      continue;
    }
    out.routes[u.vehicle] = Route{u.vehicle, std::move(path->nodes), 0};
  }
  return out;
}

PlanOutcome replan_affected(const PlanningInput& input, const std::map<int, Route>& routes) {
  PlanOutcome out;
  for (const auto& [vehicle, route] : routes) {
    auto ahead = route.remaining_links();
    bool hit = std::any_of(ahead.begin(), ahead.end(),
                           [&](const auto& link) { return input.journey(link.first, link.second).is_infinite(); });
    if (!hit) continue;
    auto path = dijkstra_fastest(input.journey, route.position(), route.destination());
    if (!path) {
      out.unreachable.insert(vehicle);
      continue;
    }
    out.routes[vehicle] = Route{vehicle, std::move(path->nodes), 0};
  }
  return out;
}

CooperativePlan cooperative_plan(const TrafficNetwork& net, const JourneyTimeMatrix& journey,
                                 const std::set<NodeId>& event_nodes, const std::set<LinkId>& event_links,
                                 const std::vector<PlanningUser>& new_users, const std::map<int, Route>& routes) {
  PlanningInput input;
  input.network = &net;
  input.journey = mask_events(journey, net, event_nodes, event_links);
  input.new_users = new_users;
  input.event_nodes = event_nodes;
  input.event_links = event_links;
  for (const auto& [vehicle, route] : routes) {
    input.users.push_back(PlanningUser{vehicle, route.position(), route.destination()});
  }

  CooperativePlan plan;
  auto fresh = plan_new_users(input);
  for (auto& [vehicle, route] : fresh.routes) plan.routes[vehicle] = PlannedRoute{std::move(route), PlanReason::kNew};
  plan.unreachable = std::move(fresh.unreachable);

  auto redo = replan_affected(input, routes);
  for (auto& [vehicle, route] : redo.routes) {
    plan.routes[vehicle] = PlannedRoute{std::move(route), PlanReason::kReplan};
  }
  plan.unreachable.merge(redo.unreachable);
  plan.masked = std::move(input.journey);
  return plan;
}

double request_distance(double v_free_mps) { return kRequestDistanceCoeff * v_free_mps * v_free_mps; }

Json route_journal_json(long long step, const Route& route, PlanReason reason) {
  Json nodes = Json::array();
  for (std::size_t i = route.cursor; i < route.nodes.size(); ++i) nodes.push_back(route.nodes[i].value);
  return Json{{"step", step},
              {"vehicle", route.vehicle},
              {"route", std::move(nodes)},
              {"reason", reason == PlanReason::kNew ? "new" : "replan"}};
}

}  // namespace smdt
