#include "smdt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "smdt/error.hpp"

namespace smdt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEndEps = 1e-9;

std::size_t at(LinkId l) { return static_cast<std::size_t>(l.value); }
std::size_t at(NodeId n) { return static_cast<std::size_t>(n.value - 1); }

std::string fmt_metric(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "nan"; }

}  // namespace

std::vector<LinkId> ActiveEvent::closed_links(const TrafficNetwork& net) const {
  if (kind == EventKind::kAccident) return {*link};
  return net.incoming(*node);
}

Vehicle record_encounter(Vehicle vehicle, const TrafficNetwork& net, std::span<const ActiveEvent> events) {
  if (!vehicle.link || vehicle.state == VehicleState::kArrived) return vehicle;
  for (const auto& e : events) {
    auto closed = e.closed_links(net);
    if (std::find(closed.begin(), closed.end(), *vehicle.link) == closed.end()) continue;
    if (vehicle.encountered.insert(e.id).second) ++vehicle.events_encountered;
    vehicle.blocked = true;
  }
  return vehicle;
}

std::optional<Route> shortest_distance_route(const TrafficNetwork& net, NodeId start, NodeId end) {
  // Lengths in meters stand in for journey times; Dijkstra only needs an order.
  JourneyTimeMatrix lengths(net.node_count());
  for (const auto& l : net.links()) lengths.set(l.from, l.to, JourneyTime::seconds(l.length_m));
  auto path = dijkstra_fastest(lengths, start, end);
  if (!path) return std::nullopt;
  return Route{0, std::move(path->nodes), 0};
}

MetricsSummary summarize(std::span<const Vehicle> vehicles, double dt_s) {
  struct Acc {
    int spawned = 0, completed = 0, blocked = 0, encounters = 0;
    double travel = 0.0;
  };
  Acc cav, unc, all;
  for (const auto& v : vehicles) {
    for (Acc* a : {v.cls == VehicleClass::kCavUser ? &cav : &unc, &all}) {
      ++a->spawned;
      a->encounters += v.events_encountered;
      a->blocked += v.blocked ? 1 : 0;
      if (v.arrival_step) {
        ++a->completed;
        a->travel += static_cast<double>(*v.arrival_step - v.entry_step) * dt_s;
      }
    }
  }
  auto finish = [](const Acc& a) {
    ClassMetrics m;
    m.spawned = a.spawned;
    m.completed = a.completed;
    if (a.completed > 0) m.mean_travel_time_s = a.travel / a.completed;
    if (a.spawned > 0) {
      m.mean_encounters = static_cast<double>(a.encounters) / a.spawned;
      m.blocking_probability = static_cast<double>(a.blocked) / a.spawned;
    }
    return m;
  };
  return MetricsSummary{finish(cav), finish(unc), finish(all)};
}

std::string metrics_csv_header() {
  return "mean_travel_time_cav_s,mean_travel_time_unconnected_s,mean_travel_time_overall_s,"
         "mean_encounters_cav,mean_encounters_unconnected,mean_encounters_overall,"
         "blocking_prob_cav,blocking_prob_unconnected,blocking_prob_overall";
}

std::string metrics_csv_row(const MetricsSummary& m) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", fmt_metric(m.cav.mean_travel_time_s),
                     fmt_metric(m.unconnected.mean_travel_time_s), fmt_metric(m.overall.mean_travel_time_s),
                     fmt_metric(m.cav.mean_encounters), fmt_metric(m.unconnected.mean_encounters),
                     fmt_metric(m.overall.mean_encounters), fmt_metric(m.cav.blocking_probability),
                     fmt_metric(m.unconnected.blocking_probability), fmt_metric(m.overall.blocking_probability));
}

Simulator::Simulator(SimulationScenario scenario, RunOptions options)
    : scenario_(std::move(scenario)),
      options_(options),
      spawn_rng_(make_rng(scenario_.seed, Stream::kSpawn)),
      class_rng_(make_rng(scenario_.seed, Stream::kVehicleClass)),
      od_rng_(make_rng(scenario_.seed, Stream::kOriginDestination)),
      ssms_rng_(make_rng(scenario_.seed, Stream::kSsmsDelivery)),
      info_rng_(make_rng(scenario_.seed, Stream::kInfoDelivery)),
      svc_rng_(make_rng(scenario_.seed, Stream::kServiceLatency)) {
  scenario_.validate();
  const auto& net = *scenario_.network;
  schedule_ = scenario_.events;
  place_random_events();

  if (scenario_.full_coverage) {
    SensingSource all{SourceId{SourceKind::kRsu, 0}, {}};
    for (const auto& n : net.nodes()) all.coverage.nodes.insert(n.id);
    for (int i = 0; i < net.link_count(); ++i) all.coverage.links.insert(LinkId{i});
    rsu_sources_.push_back(std::move(all));
  }
  for (std::size_t i = 0; i < scenario_.rsus.size(); ++i) {
    const auto& r = scenario_.rsus[i];
    rsu_sources_.push_back(SensingSource{SourceId{SourceKind::kRsu, static_cast<int>(i) + 1},
                                         rsu_coverage(net, r.node, r.radius_m)});
  }
  twin_ = TwinState(scenario_.network, scenario_.thresholds);
  queues_.resize(static_cast<std::size_t>(net.link_count()));
  waiting_.resize(static_cast<std::size_t>(net.node_count()));
  sampled_counts_.assign(static_cast<std::size_t>(net.link_count()), 0.0);
}

void Simulator::place_random_events() {
  if (!scenario_.events_random) return;
  const auto& spec = *scenario_.events_random;
  const auto& net = *scenario_.network;
  Rng rng = make_rng(scenario_.seed, Stream::kEventPlacement);

  std::vector<int> free_links(static_cast<std::size_t>(net.link_count()));
  std::vector<int> free_nodes(static_cast<std::size_t>(net.node_count()));
  for (std::size_t i = 0; i < free_links.size(); ++i) free_links[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < free_nodes.size(); ++i) free_nodes[i] = static_cast<int>(i) + 1;
  for (const auto& e : schedule_) {
    if (e.link) std::erase(free_links, e.link->value);
    if (e.node) std::erase(free_nodes, e.node->value);
  }

  const long long last = scenario_.steps() - 1;
  long long lo = std::clamp<long long>(std::llround(spec.onset_min_s / scenario_.dt_s), 0, last);
  double max_s = spec.onset_max_s.value_or(0.5 * scenario_.t_sim_s);
  long long hi = std::clamp<long long>(std::llround(max_s / scenario_.dt_s), lo, last);

  auto take = [&](std::vector<int>& pool) {
    if (pool.empty()) throw ConfigError("events_random.count exceeds the available event locations");
    boost::random::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    auto i = pick(rng);
    int v = pool[i];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    return v;
  };
  for (int k = 0; k < spec.count; ++k) {
    ScheduledEvent e;
    boost::random::uniform_int_distribution<std::size_t> kind(0, spec.kinds.size() - 1);
    e.kind = spec.kinds[kind(rng)];
    if (e.kind == EventKind::kAccident) {
      e.link = LinkId{take(free_links)};
    } else {
      e.node = NodeId{take(free_nodes)};
    }
    e.onset_step = boost::random::uniform_int_distribution<long long>(lo, hi)(rng);
    if (spec.duration_s) e.end_step = e.onset_step + std::max<long long>(1, std::llround(*spec.duration_s / scenario_.dt_s));
    schedule_.push_back(e);
  }
}

void Simulator::step() {
  if (finished()) return;
  spawn();
  toggle_events();
  sense();
  plan();
  move();
  count_encounters();
  ++step_;
}

std::optional<Route> Simulator::unconnected_route(NodeId from, NodeId to) {
  auto key = std::make_pair(from.value, to.value);
  auto it = shortest_cache_.find(key);
  if (it == shortest_cache_.end()) it = shortest_cache_.emplace(key, shortest_distance_route(network(), from, to)).first;
  return it->second;
}

void Simulator::spawn() {
  if (spawned_ >= scenario_.n_vel) return;
  const auto& net = network();
  boost::random::poisson_distribution<int, double> arrivals(scenario_.spawn_rate_per_step());
  int n = std::min(arrivals(spawn_rng_), scenario_.n_vel - spawned_);
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  boost::random::uniform_int_distribution<int> any_node(1, net.node_count());
  boost::random::uniform_int_distribution<int> other_node(1, net.node_count() - 1);

  for (int k = 0; k < n; ++k) {
    Vehicle v;
    v.id = static_cast<int>(vehicles_.size()) + 1;
    v.cls = unit(class_rng_) < scenario_.p_user ? VehicleClass::kCavUser : VehicleClass::kUnconnected;
    // Origin/destination pairs come from their own stream so the OD sequence
    // does not depend on the class mix.
    std::optional<Route> shortest;
    do {
      v.origin = NodeId{any_node(od_rng_)};
      int d = other_node(od_rng_);
      v.destination = NodeId{d >= v.origin.value ? d + 1 : d};
      shortest = unconnected_route(v.origin, v.destination);
    } while (!shortest);
    v.entry_step = step_;
    v.state = VehicleState::kQueued;
    if (v.cls == VehicleClass::kUnconnected) {
      v.route = *shortest;
      v.route.vehicle = v.id;
      if (options_.routes_journal) *options_.routes_journal << route_journal_json(step_, v.route, PlanReason::kNew).dump() << '\n';
    } else {
      pending_cav_.push_back(v.id);
    }
    waiting_[at(v.origin)].push_back(v.id);
    vehicles_.push_back(std::move(v));
    ++spawned_;
  }
}

void Simulator::toggle_events() {
  active_.clear();
  closed_.clear();
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    const auto& e = schedule_[i];
    if (step_ < e.onset_step || (e.end_step && step_ >= *e.end_step)) continue;
    ActiveEvent a{static_cast<int>(i), e.kind, e.link, e.node};
    for (LinkId l : a.closed_links(network())) closed_.insert(l);
    active_.push_back(a);
  }
}

double Simulator::link_speed(LinkId l) const {
  if (closed_.contains(l)) return 0.0;
  const Link& link = network().link(l);
  double k = traffic_density(static_cast<double>(queues_[at(l)].size()), link.length_m);
  return journey_speed(k, link.v_free_mps, link.k_max_veh_per_m);
}

bool Simulator::can_enter(LinkId l) const {
  // Entry keeps the density strictly below jam density.
  return static_cast<double>(queues_[at(l)].size() + 1) < network().link(l).jam_vehicles();
}

void Simulator::sense() {
  const auto& net = network();
  const double now = static_cast<double>(step_) * scenario_.dt_s;
  for (int i = 0; i < net.link_count(); ++i) sampled_counts_[static_cast<std::size_t>(i)] = static_cast<double>(queues_[static_cast<std::size_t>(i)].size());

  std::set<LinkId> crash_sites;
  std::set<NodeId> gatherings;
  for (const auto& e : active_) {
    if (e.link) crash_sites.insert(*e.link);
    if (e.node) gatherings.insert(*e.node);
  }
  auto observe = [&](const Coverage& c) {
    Observation o;
    o.time_s = now;
    for (LinkId l : c.links) {
      double count = sampled_counts_[at(l)];
      // Crashed vehicles remain visible on the link as stopped objects.
      o.links.push_back(LinkObservation{l, count, link_speed(l), count > 0.0 || crash_sites.contains(l)});
    }
    for (NodeId n : c.nodes) {
      o.nodes.push_back(NodeObservation{
          n, gatherings.contains(n) ? scenario_.gathering_ped_density : scenario_.background_ped_density});
    }
    return o;
  };

  for (const auto& src : rsu_sources_) {
    twin_.ingest(src, observe(src.coverage), deliver(scenario_.latency.pdr_ssms, ssms_rng_));
  }
  for (const auto& v : vehicles_) {
    if (v.cls != VehicleClass::kCavUser || !v.link) continue;
    SensingSource src{SourceId{SourceKind::kCav, v.id}, cav_coverage(net, *v.link)};
    twin_.ingest(src, observe(src.coverage), deliver(scenario_.latency.pdr_info, info_rng_));
  }
  twin_.update_events();
  if (options_.twin_journal) *options_.twin_journal << twin_snapshot_json(twin_, step_, now).dump() << '\n';
}

double Simulator::time_to_intersection(const Vehicle& v) const {
  if (!v.link) return kInf;
  double speed = link_speed(*v.link);
  if (speed < kStallSpeedMps) return kInf;
  return (network().link(*v.link).length_m - v.position_m) / speed;
}

void Simulator::apply_route(Vehicle& v, const Route& planned) {
  if (!v.routed()) {
    v.route = planned;
    v.route.vehicle = v.id;
    v.route.cursor = 0;
    return;
  }
  std::vector<NodeId> nodes(v.route.nodes.begin(), v.route.nodes.begin() + static_cast<std::ptrdiff_t>(v.route.cursor));
  nodes.insert(nodes.end(), planned.nodes.begin(), planned.nodes.end());
  v.route.nodes = std::move(nodes);
}

void Simulator::plan() {
  std::vector<PlanningUser> fresh;
  for (int id : pending_cav_) {
    const auto& v = vehicles_[static_cast<std::size_t>(id - 1)];
    fresh.push_back(PlanningUser{id, v.origin, v.destination});
  }
  std::map<int, Route> routes;
  for (const auto& v : vehicles_) {
    if (v.cls == VehicleClass::kCavUser && v.routed() && v.state != VehicleState::kArrived) routes.emplace(v.id, v.route);
  }
  if (fresh.empty() && routes.empty()) return;

  auto volumes = twin_volumes(twin_, network());
  auto journey = build_journey_matrix(network(), volumes);
  auto result = cooperative_plan(network(), journey, twin_.event_nodes(), twin_.event_links(), fresh, routes);

  for (const auto& [id, planned] : result.routes) {
    Vehicle& v = vehicles_[static_cast<std::size_t>(id - 1)];
    double t_svc = sample_service_latency(scenario_.latency, svc_rng_, scenario_.service_mode);
    // A lost response is requested again at the next step.
    if (!deliver(scenario_.latency.pdr_info, info_rng_)) continue;
    // Too late to act before the intersection: the vehicle keeps its current
    // route through it and the cloud re-plans from further along.
    if (t_svc > time_to_intersection(v)) continue;
    apply_route(v, planned.route);
    if (planned.reason == PlanReason::kNew) std::erase(pending_cav_, id);
    if (options_.routes_journal) *options_.routes_journal << route_journal_json(step_, planned.route, planned.reason).dump() << '\n';
  }
}

void Simulator::enter_link(Vehicle& v, LinkId l, double position_m) {
  auto& q = queues_[at(l)];
  double pos = std::min(position_m, network().link(l).length_m);
  if (!q.empty()) pos = std::min(pos, vehicles_[static_cast<std::size_t>(q.back() - 1)].position_m);
  q.push_back(v.id);
  v.link = l;
  v.position_m = pos;
}

void Simulator::move() {
  const auto& net = network();
  const double dt = scenario_.dt_s;
  std::vector<double> leftover(vehicles_.size() + 1, 0.0);
  std::vector<bool> crossed(vehicles_.size() + 1, false);

  // Advance along current links at the density speed, without overtaking.
  for (int i = 0; i < net.link_count(); ++i) {
    LinkId l{i};
    const double len = net.link(l).length_m;
    const double speed = link_speed(l);
    double ahead = kInf;
    for (int id : queues_[at(l)]) {
      Vehicle& v = vehicles_[static_cast<std::size_t>(id - 1)];
      double target = v.position_m + speed * dt;
      if (target >= len) {
        leftover[static_cast<std::size_t>(id)] = speed > 0.0 ? (target - len) / speed : 0.0;
        target = len;
      }
      v.position_m = std::min(target, ahead);
      ahead = v.position_m;
    }
  }

  auto try_cross = [&](Vehicle& v) -> bool {
    const auto& r = v.route;
    if (r.cursor + 1 >= r.nodes.size()) {
      v.state = VehicleState::kArrived;
      v.arrival_step = step_;
      v.link.reset();
      return true;
    }
    auto next = net.find_link(r.nodes[r.cursor], r.nodes[r.cursor + 1]);
    if (!next) throw ContractViolation(fmt::format("vehicle {} route uses a missing link", v.id));
    if (!can_enter(*next)) return false;
    double speed = link_speed(*next);
    ++v.route.cursor;
    enter_link(v, *next, leftover[static_cast<std::size_t>(v.id)] * speed);
    return true;
  };

  // Vehicles at a link end cross in FIFO order per turning movement; one
  // waiting for a full link does not hold up those heading elsewhere.
  bool progress = true;
  while (progress) {
    progress = false;
    for (int i = 0; i < net.link_count(); ++i) {
      LinkId l{i};
      if (closed_.contains(l)) continue;
      const double len = net.link(l).length_m;
      auto& q = queues_[at(l)];
      std::set<std::pair<int, int>> stuck;
      for (std::size_t k = 0; k < q.size();) {
        Vehicle& v = vehicles_[static_cast<std::size_t>(q[k] - 1)];
        if (v.position_m < len - kEndEps) break;
        std::pair<int, int> movement{v.route.nodes[v.route.cursor].value,
                                     v.route.cursor + 1 < v.route.nodes.size() ? v.route.nodes[v.route.cursor + 1].value : 0};
        if (crossed[static_cast<std::size_t>(v.id)] || stuck.contains(movement)) {
          ++k;
          continue;
        }
        int id = v.id;
        if (try_cross(v)) {
          crossed[static_cast<std::size_t>(id)] = true;
          q.erase(q.begin() + static_cast<std::ptrdiff_t>(k));
          progress = true;
        } else {
          stuck.insert(movement);
          ++k;
        }
      }
    }
  }

  // Then vehicles waiting at their origin join their first link.
  for (int n = 1; n <= net.node_count(); ++n) {
    auto& w = waiting_[at(NodeId{n})];
    std::set<int> stuck;
    for (std::size_t k = 0; k < w.size();) {
      Vehicle& v = vehicles_[static_cast<std::size_t>(w[k] - 1)];
      if (!v.routed() || v.route.nodes.size() < 2) {
        ++k;
        continue;
      }
      auto first = net.find_link(v.route.nodes[0], v.route.nodes[1]);
      if (!first) throw ContractViolation(fmt::format("vehicle {} route uses a missing link", v.id));
      if (stuck.contains(first->value) || !can_enter(*first)) {
        stuck.insert(first->value);
        ++k;
        continue;
      }
      v.route.cursor = 1;
      enter_link(v, *first, 0.0);
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }

  for (auto& v : vehicles_) {
    if (v.state == VehicleState::kArrived) continue;
    if (!v.link) {
      v.state = VehicleState::kQueued;
      continue;
    }
    bool at_end = v.position_m >= net.link(*v.link).length_m - kEndEps;
    v.state = (link_speed(*v.link) < kStallSpeedMps || at_end) ? VehicleState::kQueued : VehicleState::kMoving;
  }
}

void Simulator::count_encounters() {
  if (active_.empty()) return;
  for (auto& v : vehicles_) {
    if (!v.link) continue;
    v = record_encounter(std::move(v), network(), active_);
  }
}

MetricsSummary run(const SimulationScenario& scenario, const RunOptions& options) {
  Simulator sim(scenario, options);
  while (!sim.finished()) sim.step();
  return sim.metrics();
}

}  // namespace smdt
