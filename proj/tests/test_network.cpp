#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "smdt/error.hpp"
#include "smdt/network.hpp"
#include "test_util.hpp"

using namespace smdt;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(TrafficDensity, Examples) {
  EXPECT_EQ(traffic_density(0, 200), 0.0);
  EXPECT_EQ(traffic_density(10, 200), 0.05);
  EXPECT_EQ(traffic_density(7, 140), 0.05);
}

TEST(TrafficDensity, RejectsNonPositiveLength) {
  EXPECT_THROW(traffic_density(1, 0), InvalidLinkError);
  EXPECT_THROW(traffic_density(1, -5), InvalidLinkError);
}

TEST(JourneySpeed, LinearLawAndClamp) {
  EXPECT_EQ(journey_speed(0.0, 10, 0.2), 10.0);
  EXPECT_EQ(journey_speed(0.1, 10, 0.2), 5.0);
  EXPECT_EQ(journey_speed(0.25, 10, 0.2), 0.0);
  EXPECT_EQ(journey_speed(0.2, 10, 0.2), 0.0);
}

TEST(JourneySpeed, NonIncreasingInDensity) {
  double prev = journey_speed(0.0, 13.9, 0.3);
  for (int i = 1; i <= 400; ++i) {
    double v = journey_speed(i * 0.001, 13.9, 0.3);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(JourneyTime, Examples) {
  Link l{NodeId{1}, NodeId{2}, 100, 10, 0.2};
  EXPECT_EQ(journey_time(l, 0).value(), 10.0);
  EXPECT_EQ(journey_time(l, 10).value(), 20.0);
  EXPECT_TRUE(journey_time(l, 20).is_infinite());
  EXPECT_TRUE(journey_time(l, 25).is_infinite());
}

TEST(JourneyTime, FreeFlowIsExactAndMonotone) {
  Link l{NodeId{1}, NodeId{2}, 168.75, 13.8889, 0.3};
  EXPECT_EQ(journey_time(l, 0).value(), 168.75 / 13.8889);
  JourneyTime prev = journey_time(l, 0);
  for (int x = 1; x <= 60; ++x) {
    auto t = journey_time(l, x);
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(JourneyTime, InfinityArithmetic) {
  auto inf = JourneyTime::infinite();
  auto ten = JourneyTime::seconds(10);
  EXPECT_TRUE((inf + ten).is_infinite());
  EXPECT_TRUE((ten + inf).is_infinite());
  EXPECT_EQ((ten + ten).value(), 20.0);
  EXPECT_LT(ten, inf);
  EXPECT_EQ(inf.value(), kInf);
  EXPECT_THROW(JourneyTime::seconds(-1), ContractViolation);
  EXPECT_THROW(JourneyTime::seconds(std::nan("")), ContractViolation);
}

TEST(JourneyMatrix, TwoNodes) {
  TrafficNetwork net({{NodeId{1}, {0, 0}}, {NodeId{2}, {100, 0}}}, {{NodeId{1}, NodeId{2}, 100, 10, 0.2}});
  std::vector<double> volumes{0};
  auto m = build_journey_matrix(net, volumes);
  EXPECT_TRUE(m(NodeId{1}, NodeId{1}).is_infinite());
  EXPECT_EQ(m(NodeId{1}, NodeId{2}).value(), 10.0);
  EXPECT_TRUE(m(NodeId{2}, NodeId{1}).is_infinite());
  EXPECT_TRUE(m(NodeId{2}, NodeId{2}).is_infinite());
}

TEST(JourneyMatrix, SizeMismatchIsConfigError) {
  auto net = test::diamond();
  std::vector<double> volumes{1, 2};
  EXPECT_THROW(build_journey_matrix(net, volumes), ConfigError);
}

// Each entry is recomputed independently from the density and speed laws.
TEST(JourneyMatrix, DiamondMatchesPerEntryRecomputation) {
  auto net = test::diamond();
  std::vector<double> volumes{0, 3, 7, 19};
  auto m = build_journey_matrix(net, volumes);
  for (int i = 1; i <= 4; ++i) {
    for (int j = 1; j <= 4; ++j) {
      double expected = kInf;
      for (std::size_t k = 0; k < net.links().size(); ++k) {
        const auto& l = net.links()[k];
        if (l.from.value != i || l.to.value != j) continue;
        double v = l.v_free_mps * (1.0 - (volumes[k] / l.length_m) / l.k_max_veh_per_m);
        expected = v < 1e-6 ? kInf : l.length_m / v;
      }
      EXPECT_EQ(m(NodeId{i}, NodeId{j}).value(), expected) << i << "->" << j;
    }
  }
}

TEST(JourneyMatrix, FiniteIffLinkExistsAndBelowJam) {
  auto net = generate_grid_network({});
  std::vector<double> volumes(static_cast<std::size_t>(net.link_count()));
  for (std::size_t i = 0; i < volumes.size(); ++i) volumes[i] = static_cast<double>(i % 60);
  auto m = build_journey_matrix(net, volumes);
  for (int i = 1; i <= net.node_count(); ++i) {
    for (int j = 1; j <= net.node_count(); ++j) {
      auto id = net.find_link(NodeId{i}, NodeId{j});
      bool finite = false;
      if (id) {
        const auto& l = net.link(*id);
        double x = volumes[static_cast<std::size_t>(id->value)];
        finite = x < l.k_max_veh_per_m * l.length_m * (1.0 - 1e-6 / l.v_free_mps);
      }
      EXPECT_EQ(m(NodeId{i}, NodeId{j}).is_finite(), finite) << i << "->" << j;
    }
  }
  EXPECT_EQ(build_journey_matrix(net, volumes), m);
}

TEST(TrafficNetwork, RejectsInvalidShapes) {
  std::vector<Node> nodes{{NodeId{1}, {}}, {NodeId{2}, {}}};
  EXPECT_THROW(TrafficNetwork(nodes, {{NodeId{1}, NodeId{1}, 10, 1, 1}}), ConfigError);
  EXPECT_THROW(TrafficNetwork(nodes, {{NodeId{1}, NodeId{3}, 10, 1, 1}}), ConfigError);
  EXPECT_THROW(TrafficNetwork(nodes, {{NodeId{1}, NodeId{2}, 10, 1, 1}, {NodeId{1}, NodeId{2}, 20, 1, 1}}),
               ConfigError);
  EXPECT_THROW(TrafficNetwork(nodes, {{NodeId{1}, NodeId{2}, 0, 1, 1}}), ConfigError);
  EXPECT_THROW(TrafficNetwork(nodes, {{NodeId{1}, NodeId{2}, 10, 0, 1}}), ConfigError);
  EXPECT_THROW(TrafficNetwork({{NodeId{2}, {}}}, {}), ConfigError);
}

TEST(TrafficNetwork, Adjacency) {
  auto net = test::diamond();
  EXPECT_EQ(net.node_count(), 4);
  EXPECT_EQ(net.link_count(), 4);
  EXPECT_EQ(net.outgoing(NodeId{1}).size(), 2u);
  EXPECT_EQ(net.incoming(NodeId{4}).size(), 2u);
  EXPECT_EQ(net.find_link(NodeId{2}, NodeId{4})->value, 2);
  EXPECT_FALSE(net.find_link(NodeId{4}, NodeId{2}).has_value());
}

TEST(ParseNetwork, KmhIsConverted) {
  auto src = JsonSource::parse(R"({"nodes":[{"id":1,"x_m":0,"y_m":0},{"id":2,"x_m":1,"y_m":0}],
    "links":[{"from":1,"to":2,"length_m":100,"v_free_kmh":36,"k_max_veh_per_m":0.2}]})",
                               "net.json");
  auto net = parse_network(JsonNode(src));
  EXPECT_DOUBLE_EQ(net.link(LinkId{0}).v_free_mps, 10.0);
}

TEST(ParseNetwork, ErrorsCarryTheLine) {
  const char* text =
      "{\n"
      "  \"nodes\": [\n"
      "    {\"id\": 1, \"x_m\": 0, \"y_m\": 0},\n"
      "    {\"id\": 2, \"x_m\": 100, \"y_m\": 0}\n"
      "  ],\n"
      "  \"links\": [\n"
      "    {\"from\": 1, \"to\": 2, \"length_m\": 100, \"v_free_mps\": 10, \"k_max_veh_per_m\": 0.2},\n"
      "    {\"from\": 2, \"to\": 1,\n"
      "     \"length_m\": -4, \"v_free_mps\": 10, \"k_max_veh_per_m\": 0.2}\n"
      "  ]\n"
      "}\n";
  auto src = JsonSource::parse(text, "bad.json");
  try {
    parse_network(JsonNode(src));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:9:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("length_m"), std::string::npos) << e.what();
  }
}

TEST(ParseNetwork, UnknownEndpointAndSyntaxErrors) {
  auto src = JsonSource::parse("{\"nodes\": [{\"id\": 1, \"x_m\": 0, \"y_m\": 0}],\n\"links\": [{\"from\": 1, \"to\": 5, "
                               "\"length_m\": 1, \"v_free_mps\": 1, \"k_max_veh_per_m\": 1}]}",
                               "x.json");
  EXPECT_THROW(parse_network(JsonNode(src)), ConfigError);
  try {
    JsonSource::parse("{\n  \"nodes\": [\n  1,,\n]}", "syntax.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("syntax.json:3:", 0), 0u) << e.what();
  }
}

TEST(ParseNetwork, RoundTrip) {
  auto net = generate_grid_network({});
  auto src = JsonSource::parse(network_to_json(net).dump(), "rt.json");
  auto back = parse_network(JsonNode(src));
  ASSERT_EQ(back.link_count(), net.link_count());
  for (int i = 0; i < net.link_count(); ++i) {
    const auto& a = net.link(LinkId{i});
    const auto& b = back.link(LinkId{i});
    EXPECT_EQ(a.from, b.from);
    EXPECT_EQ(a.to, b.to);
    EXPECT_EQ(a.length_m, b.length_m);
    EXPECT_EQ(a.v_free_mps, b.v_free_mps);
  }
}

TEST(GridNetwork, NinetyNodesFiveHundredFourLinks) {
  auto net = generate_grid_network({});
  EXPECT_EQ(net.node_count(), 90);
  EXPECT_EQ(net.link_count(), 504);
  // Same options, same network.
  auto again = generate_grid_network({});
  EXPECT_EQ(network_to_json(net), network_to_json(again));
}

TEST(GridNetwork, StronglyConnected) {
  auto net = generate_grid_network({});
  for (int start : {1, 90}) {
    std::vector<bool> seen(91, false);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (LinkId l : net.outgoing(NodeId{n})) {
        int to = net.link(l).to.value;
        if (!seen[static_cast<std::size_t>(to)]) {
          seen[static_cast<std::size_t>(to)] = true;
          stack.push_back(to);
        }
      }
    }
    for (int n = 1; n <= 90; ++n) EXPECT_TRUE(seen[static_cast<std::size_t>(n)]) << n;
  }
}
