#include <algorithm>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "smdt/error.hpp"
#include "smdt/nav.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace smdt;

namespace {

std::vector<NodeId> ids(std::initializer_list<int> v) {
  std::vector<NodeId> out;
  for (int x : v) out.push_back(NodeId{x});
  return out;
}

JourneyTimeMatrix diamond_matrix(double a, double b, double c, double d) {
  JourneyTimeMatrix m(4);
  m.set(NodeId{1}, NodeId{2}, JourneyTime::seconds(a));
  m.set(NodeId{2}, NodeId{4}, JourneyTime::seconds(b));
  m.set(NodeId{1}, NodeId{3}, JourneyTime::seconds(c));
  m.set(NodeId{3}, NodeId{4}, JourneyTime::seconds(d));
  return m;
}

}  // namespace

TEST(Dijkstra, TwoNodes) {
  JourneyTimeMatrix m(2);
  m.set(NodeId{1}, NodeId{2}, JourneyTime::seconds(10));
  auto p = dijkstra_fastest(m, NodeId{1}, NodeId{2});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->nodes, ids({1, 2}));
  EXPECT_EQ(p->cost.value(), 10.0);
}

TEST(Dijkstra, DiamondPicksCheaperBranch) {
  auto p = dijkstra_fastest(diamond_matrix(10, 10, 5, 20), NodeId{1}, NodeId{4});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->nodes, ids({1, 2, 4}));
  EXPECT_EQ(p->cost.value(), 20.0);
}

TEST(Dijkstra, FullyMaskedIsUnreachable) {
  auto m = diamond_matrix(10, 10, 5, 20);
  m.set(NodeId{2}, NodeId{4}, JourneyTime::infinite());
  m.set(NodeId{3}, NodeId{4}, JourneyTime::infinite());
  EXPECT_FALSE(dijkstra_fastest(m, NodeId{1}, NodeId{4}).has_value());
}

TEST(Dijkstra, TiesGoToLowerNodeIds) {
  auto p = dijkstra_fastest(diamond_matrix(5, 5, 5, 5), NodeId{1}, NodeId{4});
  ASSERT_TRUE(p);
  EXPECT_EQ(p->nodes, ids({1, 2, 4}));
}

TEST(Dijkstra, RejectsDegenerateAndOutOfRange) {
  auto m = diamond_matrix(1, 1, 1, 1);
  EXPECT_THROW(dijkstra_fastest(m, NodeId{2}, NodeId{2}), DegenerateRequestError);
  EXPECT_THROW(dijkstra_fastest(m, NodeId{0}, NodeId{2}), ContractViolation);
  EXPECT_THROW(dijkstra_fastest(m, NodeId{1}, NodeId{5}), ContractViolation);
}

TEST(Dijkstra, MatchesBruteForceOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto g = test::random_digraph(seed);
    for (int s = 1; s <= g.matrix.size(); ++s) {
      for (int e = 1; e <= g.matrix.size(); ++e) {
        if (s == e) continue;
        auto best = test::brute_force_cost(g.matrix, NodeId{s}, NodeId{e});
        auto p = dijkstra_fastest(g.matrix, NodeId{s}, NodeId{e});
        if (!best) {
          EXPECT_FALSE(p) << "seed " << seed;
          continue;
        }
        ASSERT_TRUE(p) << "seed " << seed;
        EXPECT_EQ(p->cost.value(), *best) << "seed " << seed << " " << s << "->" << e;
        EXPECT_EQ(test::path_cost(g.matrix, p->nodes), *best);
      }
    }
  }
}

TEST(Dijkstra, ScaleInvariantArgmin) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto g = test::random_digraph(seed);
    JourneyTimeMatrix scaled(g.matrix.size());
    for (int i = 1; i <= g.matrix.size(); ++i) {
      for (int j = 1; j <= g.matrix.size(); ++j) {
        auto t = g.matrix(NodeId{i}, NodeId{j});
        if (t.is_finite()) scaled.set(NodeId{i}, NodeId{j}, JourneyTime::seconds(t.value() * 4.0));
      }
    }
    for (int e = 2; e <= g.matrix.size(); ++e) {
      auto a = dijkstra_fastest(g.matrix, NodeId{1}, NodeId{e});
      auto b = dijkstra_fastest(scaled, NodeId{1}, NodeId{e});
      ASSERT_EQ(a.has_value(), b.has_value());
      if (a) EXPECT_EQ(a->nodes, b->nodes) << "seed " << seed;
    }
  }
}

TEST(MaskEvents, NodeMasksEveryIncomingLink) {
  auto net = test::diamond();
  auto m = build_journey_matrix(net, std::vector<double>(4, 0.0));
  auto masked = mask_events(m, net, {NodeId{4}}, {});
  EXPECT_TRUE(masked(NodeId{2}, NodeId{4}).is_infinite());
  EXPECT_TRUE(masked(NodeId{3}, NodeId{4}).is_infinite());
  EXPECT_EQ(masked(NodeId{1}, NodeId{2}), m(NodeId{1}, NodeId{2}));
  EXPECT_EQ(masked(NodeId{1}, NodeId{3}), m(NodeId{1}, NodeId{3}));
}

TEST(MaskEvents, LinkMasksOnlyThatEntry) {
  auto net = test::diamond();
  auto m = build_journey_matrix(net, std::vector<double>(4, 0.0));
  auto masked = mask_events(m, net, {}, {LinkId{0}});
  for (int i = 1; i <= 4; ++i) {
    for (int j = 1; j <= 4; ++j) {
      if (i == 1 && j == 2) {
        EXPECT_TRUE(masked(NodeId{i}, NodeId{j}).is_infinite());
      } else {
        EXPECT_EQ(masked(NodeId{i}, NodeId{j}), m(NodeId{i}, NodeId{j}));
      }
    }
  }
  EXPECT_EQ(mask_events(m, net, {}, {}), m);
}

TEST(MaskEvents, IdempotentAndAvoided) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto g = test::random_digraph(seed);
    std::mt19937_64 rng(seed + 1000);
    std::set<NodeId> nodes;
    std::set<LinkId> links;
    if (g.net.node_count() > 2) nodes.insert(NodeId{static_cast<int>(rng() % g.net.node_count()) + 1});
    if (g.net.link_count() > 0) links.insert(LinkId{static_cast<int>(rng() % g.net.link_count())});
    auto once = mask_events(g.matrix, g.net, nodes, links);
    EXPECT_EQ(mask_events(once, g.net, nodes, links), once);
    for (int e = 2; e <= g.net.node_count(); ++e) {
      auto p = dijkstra_fastest(once, NodeId{1}, NodeId{e});
      if (!p) continue;
      for (std::size_t i = 0; i + 1 < p->nodes.size(); ++i) {
        auto l = g.net.find_link(p->nodes[i], p->nodes[i + 1]);
        ASSERT_TRUE(l);
        EXPECT_FALSE(links.contains(*l));
      }
      for (std::size_t i = 1; i < p->nodes.size(); ++i) EXPECT_FALSE(nodes.contains(p->nodes[i]));
    }
  }
}

TEST(PlanNewUsers, RoutesAndUnreachable) {
  auto net = test::diamond();
  PlanningInput in;
  in.network = &net;
  in.journey = mask_events(build_journey_matrix(net, std::vector<double>(4, 0.0)), net, {NodeId{4}}, {});
  in.new_users = {{1, NodeId{1}, NodeId{4}}, {2, NodeId{1}, NodeId{3}}};
  auto out = plan_new_users(in);
  EXPECT_EQ(out.unreachable, std::set<int>{1});
  ASSERT_TRUE(out.routes.contains(2));
  EXPECT_EQ(out.routes[2].nodes, ids({1, 3}));
}

TEST(PlanNewUsers, SameOdSameRoute) {
  auto net = test::diamond();
  PlanningInput in;
  in.network = &net;
  in.journey = diamond_matrix(7, 7, 7, 7);
  in.new_users = {{1, NodeId{1}, NodeId{4}}, {2, NodeId{1}, NodeId{4}}};
  auto out = plan_new_users(in);
  EXPECT_EQ(out.routes[1].nodes, out.routes[2].nodes);
}

TEST(ReplanAffected, ClosedLinkReroutesOnlyAffected) {
  auto net = test::crossed_diamond();
  auto journey = build_journey_matrix(net, std::vector<double>(5, 0.0));
  // User 1 is on (1,2) heading to node 2; user 2 is already on the closed
  // link (2,4); user 3 uses the other branch.
  std::map<int, Route> routes{{1, Route{1, ids({1, 2, 4}), 1}},
                              {2, Route{2, ids({1, 2, 4}), 2}},
                              {3, Route{3, ids({1, 3, 4}), 1}}};
  auto plan = cooperative_plan(net, journey, {}, {*net.find_link(NodeId{2}, NodeId{4})}, {}, routes);
  ASSERT_EQ(plan.routes.size(), 1u);
  ASSERT_TRUE(plan.routes.contains(1));
  EXPECT_EQ(plan.routes[1].reason, PlanReason::kReplan);
  EXPECT_EQ(plan.routes[1].route.nodes, ids({2, 3, 4}));
  EXPECT_TRUE(plan.unreachable.empty());
}

TEST(ReplanAffected, UserAtOriginGoesViaThree) {
  auto net = test::diamond();
  auto journey = build_journey_matrix(net, std::vector<double>(4, 0.0));
  std::map<int, Route> routes{{1, Route{1, ids({1, 2, 4}), 0}}, {2, Route{2, ids({1, 3, 4}), 0}}};
  auto plan = cooperative_plan(net, journey, {}, {LinkId{2}}, {}, routes);
  ASSERT_EQ(plan.routes.size(), 1u);
  EXPECT_EQ(plan.routes.at(1).route.nodes, ids({1, 3, 4}));
}

TEST(ReplanAffected, KeysAreExactlyTheIntersectingUsers) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto g = test::random_digraph(seed);
    std::map<int, Route> routes;
    for (int e = 2; e <= g.net.node_count(); ++e) {
      auto p = dijkstra_fastest(g.matrix, NodeId{1}, NodeId{e});
      if (p) routes[e] = Route{e, p->nodes, 0};
    }
    if (g.net.link_count() == 0) continue;
    std::set<LinkId> closed{LinkId{static_cast<int>(seed % static_cast<std::uint64_t>(g.net.link_count()))}};
    PlanningInput in;
    in.network = &g.net;
    in.journey = mask_events(g.matrix, g.net, {}, closed);
    auto out = replan_affected(in, routes);
    const Link& c = g.net.link(*closed.begin());
    for (const auto& [v, r] : routes) {
      bool crosses = false;
      for (const auto& [a, b] : r.remaining_links()) crosses |= (a == c.from && b == c.to);
      EXPECT_EQ(out.routes.contains(v) || out.unreachable.contains(v), crosses) << "seed " << seed;
    }
  }
}

TEST(CooperativePlan, NewUserAvoidsKnownEvent) {
  auto net = test::diamond();
  auto journey = build_journey_matrix(net, std::vector<double>(4, 0.0));
  auto plan = cooperative_plan(net, journey, {}, {LinkId{3}}, {{9, NodeId{1}, NodeId{4}}}, {});
  ASSERT_TRUE(plan.routes.contains(9));
  EXPECT_EQ(plan.routes[9].route.nodes, ids({1, 2, 4}));
  EXPECT_EQ(plan.routes[9].reason, PlanReason::kNew);
}

TEST(RequestDistance, Examples) {
  EXPECT_NEAR(request_distance(5.556), 5.062, 0.001);
  EXPECT_EQ(request_distance(0.0), 0.0);
  EXPECT_NEAR(request_distance(10.0), 16.40, 0.01);
  // The rounded coefficient stays within 0.1% of v^2 / (2 a_comfy).
  EXPECT_NEAR(kRequestDistanceCoeff, 1.0 / (2.0 * kComfortDecelMps2), 1e-3 * kRequestDistanceCoeff);
}

TEST(RouteJournal, FromCursorOn) {
  Route r{5, ids({1, 2, 4}), 1};
  auto j = route_journal_json(12, r, PlanReason::kReplan);
  EXPECT_EQ(j.dump(), R"({"reason":"replan","route":[2,4],"step":12,"vehicle":5})");
}
