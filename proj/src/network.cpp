#include "smdt/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "smdt/error.hpp"
#include "smdt/rng.hpp"

namespace smdt {

TrafficNetwork::TrafficNetwork(std::vector<Node> nodes, std::vector<Link> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id.value != static_cast<int>(i) + 1) {
      throw ConfigError(fmt::format("node ids must be dense 1..M in order; position {} has id {}", i,
                                    nodes_[i].id.value));
    }
  }
  out_.resize(nodes_.size());
  in_.resize(nodes_.size());
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (!contains(l.from) || !contains(l.to)) {
      throw ConfigError(fmt::format("link {} references a missing node ({} -> {})", i, l.from.value, l.to.value));
    }
    if (l.from == l.to) throw ConfigError(fmt::format("link {} is a self-link at node {}", i, l.from.value));
    if (!seen.insert({l.from.value, l.to.value}).second) {
      throw ConfigError(fmt::format("link {} duplicates {} -> {}", i, l.from.value, l.to.value));
    }
    if (!(l.length_m > 0.0) || !(l.v_free_mps > 0.0) || !(l.k_max_veh_per_m > 0.0)) {
      throw ConfigError(fmt::format("link {} needs positive length, free-flow speed and jam density", i));
    }
    LinkId id{static_cast<int>(i)};
    out_[static_cast<std::size_t>(l.from.value - 1)].push_back(id);
    in_[static_cast<std::size_t>(l.to.value - 1)].push_back(id);
  }
}

std::optional<LinkId> TrafficNetwork::find_link(NodeId from, NodeId to) const {
  if (!contains(from)) return std::nullopt;
  for (LinkId id : outgoing(from)) {
    if (link(id).to == to) return id;
  }
  return std::nullopt;
}

JourneyTime JourneyTime::seconds(double s) {
  if (std::isnan(s) || s < 0.0) throw ContractViolation("journey time must be a non-negative number");
  JourneyTime t;
  t.s_ = s;
  return t;
}

JourneyTimeMatrix::JourneyTimeMatrix(int node_count)
    : m_(node_count), cells_(static_cast<std::size_t>(node_count) * static_cast<std::size_t>(node_count)) {}

std::size_t JourneyTimeMatrix::index(NodeId from, NodeId to) const {
  if (from.value < 1 || from.value > m_ || to.value < 1 || to.value > m_) {
    throw ContractViolation(fmt::format("matrix index ({}, {}) outside 1..{}", from.value, to.value, m_));
  }
  return static_cast<std::size_t>(from.value - 1) * static_cast<std::size_t>(m_) +
         static_cast<std::size_t>(to.value - 1);
}

double traffic_density(double vehicles, double length_m) {
  if (!(length_m > 0.0)) throw InvalidLinkError(fmt::format("link length must be positive, got {}", length_m));
  return vehicles / length_m;
}

double journey_speed(double density, double v_free_mps, double k_max_veh_per_m) {
  return std::max(0.0, v_free_mps * (1.0 - density / k_max_veh_per_m));
}

JourneyTime journey_time(const Link& link, double vehicles) {
  double v = journey_speed(traffic_density(vehicles, link.length_m), link.v_free_mps, link.k_max_veh_per_m);
  if (v < kStallSpeedMps) return JourneyTime::infinite();
  return JourneyTime::seconds(link.length_m / v);
}

JourneyTimeMatrix build_journey_matrix(const TrafficNetwork& net, std::span<const double> volumes) {
  if (volumes.size() != static_cast<std::size_t>(net.link_count())) {
    throw ConfigError(fmt::format("expected {} link volumes, got {}", net.link_count(), volumes.size()));
  }
  JourneyTimeMatrix m(net.node_count());
  for (int i = 0; i < net.link_count(); ++i) {
    const Link& l = net.links()[static_cast<std::size_t>(i)];
    m.set(l.from, l.to, journey_time(l, volumes[static_cast<std::size_t>(i)]));
  }
  return m;
}

TrafficNetwork parse_network(const JsonNode& root) {
  root.expect_object();
  auto nodes_json = root.at("nodes");
  nodes_json.expect_array();
  std::vector<Node> nodes;
  std::set<long long> ids;
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    auto n = nodes_json.at(i);
    n.expect_object();
    auto id = n.at("id").as_int();
    if (!ids.insert(id).second) n.at("id").fail(fmt::format("duplicate node id {}", id));
    nodes.push_back(Node{NodeId{static_cast<int>(id)}, Point{n.at("x_m").as_double(), n.at("y_m").as_double()}});
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id.value != static_cast<int>(i) + 1) {
      nodes_json.fail(fmt::format("node ids must be dense 1..{}; id {} is missing", nodes.size(), i + 1));
    }
  }
  const auto m = static_cast<long long>(nodes.size());

  auto links_json = root.at("links");
  links_json.expect_array();
  std::vector<Link> links;
  std::set<std::pair<long long, long long>> pairs;
  for (std::size_t i = 0; i < links_json.size(); ++i) {
    auto l = links_json.at(i);
    l.expect_object();
    auto from = l.at("from").as_int();
    auto to = l.at("to").as_int();
    if (from < 1 || from > m) l.at("from").fail(fmt::format("unknown node {}", from));
    if (to < 1 || to > m) l.at("to").fail(fmt::format("unknown node {}", to));
    if (from == to) l.fail(fmt::format("self-link at node {}", from));
    if (!pairs.insert({from, to}).second) l.fail(fmt::format("parallel link {} -> {}", from, to));

    auto positive = [&](const char* key) {
      auto v = l.at(key);
      double d = v.as_double();
      if (!(d > 0.0)) v.fail(fmt::format("'{}' must be positive", key));
      return d;
    };
    double v_free = 0.0;
    if (l.has("v_free_mps")) {
      v_free = positive("v_free_mps");
    } else if (l.has("v_free_kmh")) {
      v_free = positive("v_free_kmh") / 3.6;
    } else {
      l.fail("missing required key 'v_free_mps' (or 'v_free_kmh')");
    }
    links.push_back(Link{NodeId{static_cast<int>(from)}, NodeId{static_cast<int>(to)}, positive("length_m"),
                         v_free, positive("k_max_veh_per_m")});
  }
  return TrafficNetwork(std::move(nodes), std::move(links));
}

TrafficNetwork load_network(const std::filesystem::path& path) {
  auto src = JsonSource::load(path);
  return parse_network(JsonNode(src));
}

Json network_to_json(const TrafficNetwork& net) {
  Json nodes = Json::array();
  for (const auto& n : net.nodes()) {
    nodes.push_back({{"id", n.id.value}, {"x_m", n.position.x_m}, {"y_m", n.position.y_m}});
  }
  Json links = Json::array();
  for (const auto& l : net.links()) {
    links.push_back({{"from", l.from.value},
                     {"to", l.to.value},
                     {"length_m", l.length_m},
                     {"v_free_mps", l.v_free_mps},
                     {"k_max_veh_per_m", l.k_max_veh_per_m}});
  }
  return Json{{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

TrafficNetwork generate_grid_network(const GridNetworkOptions& o) {
  if (o.rows < 2 || o.cols < 2) throw ConfigError("grid needs at least 2 rows and 2 columns");
  Rng rng(splitmix64(o.seed));
  boost::random::uniform_real_distribution<double> jitter(-o.jitter_m, o.jitter_m);

  auto id_of = [&](int r, int c) { return NodeId{r * o.cols + c + 1}; };
  std::vector<Node> nodes;
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c < o.cols; ++c) {
      double x = c * o.spacing_m + jitter(rng);
      double y = r * o.spacing_m + jitter(rng);
      nodes.push_back(Node{id_of(r, c), Point{x, y}});
    }
  }

  auto distance = [&](NodeId a, NodeId b) {
    const auto& pa = nodes[static_cast<std::size_t>(a.value - 1)].position;
    const auto& pb = nodes[static_cast<std::size_t>(b.value - 1)].position;
    return std::hypot(pa.x_m - pb.x_m, pa.y_m - pb.y_m);
  };
  const double arterial_v = o.arterial_kmh / 3.6;
  const double local_v = o.local_kmh / 3.6;

  std::vector<Link> links;
  auto add_pair = [&](NodeId a, NodeId b, bool arterial) {
    double v = arterial ? arterial_v : local_v;
    double k = arterial ? o.arterial_k_max : o.local_k_max;
    links.push_back(Link{a, b, distance(a, b), v, k});
    links.push_back(Link{b, a, distance(a, b), v, k});
  };
  for (int r = 0; r < o.rows; ++r) {
    for (int c = 0; c + 1 < o.cols; ++c) add_pair(id_of(r, c), id_of(r, c + 1), r % o.arterial_every == 0);
  }
  for (int c = 0; c < o.cols; ++c) {
    for (int r = 0; r + 1 < o.rows; ++r) add_pair(id_of(r, c), id_of(r + 1, c), c % o.arterial_every == 0);
  }
  if (static_cast<int>(links.size()) > o.target_links) {
    throw ConfigError(fmt::format("target of {} links is below the {} grid links", o.target_links, links.size()));
  }

  std::vector<std::pair<NodeId, NodeId>> diagonals;
  for (int r = 0; r + 1 < o.rows; ++r) {
    for (int c = 0; c + 1 < o.cols; ++c) {
      diagonals.emplace_back(id_of(r, c), id_of(r + 1, c + 1));
      diagonals.emplace_back(id_of(r, c + 1), id_of(r + 1, c));
    }
  }
  // Fisher-Yates with a portable index distribution.
  for (std::size_t i = diagonals.size(); i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(diagonals[i - 1], diagonals[pick(rng)]);
  }
  for (const auto& [a, b] : diagonals) {
    int missing = o.target_links - static_cast<int>(links.size());
    if (missing <= 0) break;
    links.push_back(Link{a, b, distance(a, b), local_v, o.local_k_max});
    if (missing >= 2) links.push_back(Link{b, a, distance(a, b), local_v, o.local_k_max});
  }
  if (static_cast<int>(links.size()) != o.target_links) {
    throw ConfigError(fmt::format("cannot reach {} links on a {}x{} grid", o.target_links, o.rows, o.cols));
  }
  return TrafficNetwork(std::move(nodes), std::move(links));
}

}  // namespace smdt
