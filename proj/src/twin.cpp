#include "smdt/twin.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "smdt/error.hpp"

namespace smdt {
namespace {

constexpr double kTimeEps = 1e-9;

double segment_distance(Point p, Point a, Point b) {
  double dx = b.x_m - a.x_m;
  double dy = b.y_m - a.y_m;
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x_m - a.x_m) * dx + (p.y_m - a.y_m) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x_m - (a.x_m + t * dx), p.y_m - (a.y_m + t * dy));
}

bool stalled(const SpeedSample& s, double v_thre) { return s.occupied && s.speed_mps < v_thre; }

}  // namespace

Coverage rsu_coverage(const TrafficNetwork& net, NodeId at, double radius_m) {
  if (!net.contains(at)) throw ConfigError(fmt::format("RSU placed at unknown node {}", at.value));
  Coverage c;
  Point centre = net.node(at).position;
  for (const auto& n : net.nodes()) {
    if (std::hypot(n.position.x_m - centre.x_m, n.position.y_m - centre.y_m) <= radius_m) c.nodes.insert(n.id);
  }
  for (int i = 0; i < net.link_count(); ++i) {
    const Link& l = net.link(LinkId{i});
    if (segment_distance(centre, net.node(l.from).position, net.node(l.to).position) <= radius_m) {
      c.links.insert(LinkId{i});
    }
  }
  return c;
}

Coverage cav_coverage(const TrafficNetwork& net, LinkId current) {
  Coverage c;
  c.links.insert(current);
  c.nodes.insert(net.link(current).to);
  return c;
}

void EventThresholds::validate() const {
  if (!(d_thre > 0.0) || !(v_thre > 0.0) || !(accident_window_s > 0.0)) {
    throw ConfigError("event thresholds d_thre, v_thre and accident_window_s must be positive");
  }
}

TwinState::TwinState(std::shared_ptr<const TrafficNetwork> net, EventThresholds thresholds)
    : net_(std::move(net)), thresholds_(thresholds) {
  thresholds_.validate();
  auto links = static_cast<std::size_t>(net_->link_count());
  auto nodes = static_cast<std::size_t>(net_->node_count());
  volumes_.assign(links, 0.0);
  windows_.resize(links);
  link_stamp_.resize(links);
  densities_.resize(nodes);
  node_stamp_.resize(nodes);
}

void TwinState::ingest(const SensingSource& source, const Observation& obs, bool delivered) {
  for (const auto& o : obs.links) {
    if (!source.coverage.links.contains(o.link)) {
      throw ContractViolation(fmt::format("source {} reported link {} outside its coverage", source.id.id, o.link.value));
    }
    if (o.volume < 0.0) throw ContractViolation("observed volume must be non-negative");
  }
  for (const auto& o : obs.nodes) {
    if (!source.coverage.nodes.contains(o.node)) {
      throw ContractViolation(fmt::format("source {} reported node {} outside its coverage", source.id.id, o.node.value));
    }
    if (o.ped_density < 0.0) throw ContractViolation("observed pedestrian density must be non-negative");
  }
  if (!delivered) return;

  for (const auto& o : obs.links) {
    auto i = static_cast<std::size_t>(o.link.value);
    if (link_stamp_[i] && obs.time_s < *link_stamp_[i]) continue;
    link_stamp_[i] = obs.time_s;
    volumes_[i] = o.volume;
    auto& w = windows_[i];
    // Same-timestamp reports replace each other (last writer wins).
    if (!w.empty() && std::abs(w.back().time_s - obs.time_s) < kTimeEps) w.pop_back();
    w.push_back(SpeedSample{obs.time_s, o.speed_mps, o.occupied});
    while (w.size() > 1 && w[1].time_s <= obs.time_s - thresholds_.accident_window_s + kTimeEps) w.pop_front();
  }
  for (const auto& o : obs.nodes) {
    auto i = static_cast<std::size_t>(o.node.value - 1);
    if (node_stamp_[i] && obs.time_s < *node_stamp_[i]) continue;
    node_stamp_[i] = obs.time_s;
    densities_[i] = o.ped_density;
  }
  auto& stamp = source_stamp_[source.id];
  stamp = std::max(stamp, obs.time_s);
}

void TwinState::update_events() {
  std::erase_if(accident_links_, [&](LinkId l) {
    const auto& w = speed_window(l);
    return !w.empty() && !stalled(w.back(), thresholds_.v_thre);
  });
  accident_links_.merge(detect_accident(*this, thresholds_).second);

  n_eve_ = detect_pedestrian_gathering(*this, thresholds_);
  for (int n = 1; n <= net_->node_count(); ++n) {
    int stalled_approaches = 0;
    for (LinkId in : net_->incoming(NodeId{n})) stalled_approaches += accident_links_.contains(in) ? 1 : 0;
    if (stalled_approaches >= 2) n_eve_.insert(NodeId{n});
  }
  l_eve_ = accident_links_;
}

std::optional<double> TwinState::ped_density(NodeId n) const {
  return densities_.at(static_cast<std::size_t>(n.value - 1));
}

std::optional<double> TwinState::window_min_speed(LinkId l) const {
  const auto& w = speed_window(l);
  if (w.empty()) return std::nullopt;
  double m = w.front().speed_mps;
  for (const auto& s : w) m = std::min(m, s.speed_mps);
  return m;
}

std::optional<double> TwinState::last_update(SourceId s) const {
  auto it = source_stamp_.find(s);
  if (it == source_stamp_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> TwinState::element_update(LinkId l) const {
  return link_stamp_.at(static_cast<std::size_t>(l.value));
}

std::optional<double> TwinState::element_update(NodeId n) const {
  return node_stamp_.at(static_cast<std::size_t>(n.value - 1));
}

TwinState ingest_observation(TwinState state, const SensingSource& source, const Observation& obs, bool delivered) {
  state.ingest(source, obs, delivered);
  return state;
}

std::set<NodeId> detect_pedestrian_gathering(const TwinState& state, const EventThresholds& thresholds) {
  std::set<NodeId> out;
  for (int n = 1; n <= state.network().node_count(); ++n) {
    auto d = state.ped_density(NodeId{n});
    if (d && *d > thresholds.d_thre) out.insert(NodeId{n});
  }
  return out;
}

std::pair<std::set<NodeId>, std::set<LinkId>> detect_accident(const TwinState& state,
                                                              const EventThresholds& thresholds) {
  const auto& net = state.network();
  std::set<LinkId> links;
  for (int i = 0; i < net.link_count(); ++i) {
    const auto& w = state.speed_window(LinkId{i});
    if (w.empty()) continue;
    double latest = w.back().time_s;
    // The retained history must reach back a full window.
    if (w.front().time_s > latest - thresholds.accident_window_s + kTimeEps) continue;
    // The oldest retained sample is the last-known state at the window start.
    bool all_stalled =
        std::all_of(w.begin(), w.end(), [&](const SpeedSample& s) { return stalled(s, thresholds.v_thre); });
    if (all_stalled) links.insert(LinkId{i});
  }
  std::set<NodeId> nodes;
  for (int n = 1; n <= net.node_count(); ++n) {
    int count = 0;
    for (LinkId in : net.incoming(NodeId{n})) count += links.contains(in) ? 1 : 0;
    if (count >= 2) nodes.insert(NodeId{n});
  }
  return {nodes, links};
}

std::vector<double> twin_volumes(const TwinState& state, const TrafficNetwork& net) {
  std::vector<double> v(static_cast<std::size_t>(net.link_count()), 0.0);
  for (int i = 0; i < net.link_count(); ++i) v[static_cast<std::size_t>(i)] = state.volume(LinkId{i});
  return v;
}

Json twin_snapshot_json(const TwinState& state, long long step, double time_s) {
  const auto& net = state.network();
  Json volumes = Json::array();
  for (int i = 0; i < net.link_count(); ++i) volumes.push_back(state.volume(LinkId{i}));
  Json densities = Json::object();
  for (int n = 1; n <= net.node_count(); ++n) {
    if (auto d = state.ped_density(NodeId{n})) densities[std::to_string(n)] = *d;
  }
  Json n_eve = Json::array();
  for (NodeId n : state.event_nodes()) n_eve.push_back(n.value);
  Json l_eve = Json::array();
  for (LinkId l : state.event_links()) {
    const Link& link = net.link(l);
    l_eve.push_back(Json::array({link.from.value, link.to.value}));
  }
  return Json{{"step", step},       {"time_s", time_s}, {"volumes", std::move(volumes)},
              {"densities", std::move(densities)}, {"n_eve", std::move(n_eve)}, {"l_eve", std::move(l_eve)}};
}

}  // namespace smdt
