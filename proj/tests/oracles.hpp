#pragma once

// Independent reference implementations used to check the library.

#include <optional>
#include <random>
#include <vector>

#include "smdt/network.hpp"

namespace smdt::test {

struct RandomGraph {
  TrafficNetwork net;
  JourneyTimeMatrix matrix;
};

// 2..8 nodes, up to 20 links, weights uniform in [1, 100) seconds, and each
// link masked to +inf with probability 0.2.
inline RandomGraph random_digraph(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_int_distribution<int> node_count(2, 8);
  int m = node_count(rng);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::uniform_int_distribution<std::size_t> link_count(1, std::min<std::size_t>(20, pairs.size()));
  pairs.resize(link_count(rng));

  std::vector<Node> nodes;
  for (int i = 1; i <= m; ++i) nodes.push_back(Node{NodeId{i}, {}});
  std::vector<Link> links;
  for (auto [a, b] : pairs) links.push_back(Link{NodeId{a}, NodeId{b}, 100, 10, 0.2});
  TrafficNetwork net(nodes, links);

  JourneyTimeMatrix matrix(m);
  std::uniform_real_distribution<double> weight(1.0, 100.0);
  std::bernoulli_distribution masked(0.2);
  for (auto [a, b] : pairs) {
    double w = weight(rng);
    matrix.set(NodeId{a}, NodeId{b}, masked(rng) ? JourneyTime::infinite() : JourneyTime::seconds(w));
  }
  return RandomGraph{std::move(net), std::move(matrix)};
}

// Sum of entries along `nodes`, adding left to right like a path walk.
inline double path_cost(const JourneyTimeMatrix& m, const std::vector<NodeId>& nodes) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) c += m(nodes[i], nodes[i + 1]).value();
  return c;
}

// Minimum cost over every simple path, by exhaustive depth-first enumeration.
inline std::optional<double> brute_force_cost(const JourneyTimeMatrix& m, NodeId start, NodeId end) {
  std::optional<double> best;
  std::vector<bool> on_path(static_cast<std::size_t>(m.size()) + 1, false);
  auto walk = [&](auto&& self, NodeId at, double cost) -> void {
    if (at == end) {
      if (!best || cost < *best) best = cost;
      return;
    }
    on_path[static_cast<std::size_t>(at.value)] = true;
    for (int next = 1; next <= m.size(); ++next) {
      auto w = m(at, NodeId{next});
      if (w.is_infinite() || on_path[static_cast<std::size_t>(next)]) continue;
      self(self, NodeId{next}, cost + w.value());
    }
    on_path[static_cast<std::size_t>(at.value)] = false;
  };
  walk(walk, start, 0.0);
  return best;
}

}  // namespace smdt::test
