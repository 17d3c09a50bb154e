#include "smdt/scenario.hpp"

#include <cmath>

#include <fmt/format.h>

#include "smdt/error.hpp"

namespace smdt {

const char* to_string(EventKind kind) {
  return kind == EventKind::kAccident ? "accident" : "pedestrian_gathering";
}

long long SimulationScenario::steps() const { return std::llround(t_sim_s / dt_s); }

double SimulationScenario::spawn_rate_per_step() const {
  return static_cast<double>(n_vel) / (spawn_horizon_fraction * static_cast<double>(steps()));
}

void SimulationScenario::validate() const {
  if (!network) throw ConfigError("scenario has no network");
  if (!(dt_s > 0.0)) throw ConfigError("sim.dt_s must be positive");
  if (!(t_sim_s > 0.0)) throw ConfigError("sim.t_sim_s must be positive");
  if (std::abs(static_cast<double>(steps()) * dt_s - t_sim_s) > 1e-9 * t_sim_s) {
    throw ConfigError(fmt::format("sim.t_sim_s ({}) must be a multiple of sim.dt_s ({})", t_sim_s, dt_s));
  }
  if (n_vel < 0) throw ConfigError("traffic.n_vel must be non-negative");
  if (!(p_user >= 0.0 && p_user <= 1.0)) throw ConfigError("traffic.p_user must lie in [0, 1]");
  if (!(spawn_horizon_fraction > 0.0 && spawn_horizon_fraction <= 1.0)) {
    throw ConfigError("traffic.spawn.horizon_fraction must lie in (0, 1]");
  }
  if (network->node_count() < 2) throw ConfigError("network needs at least two nodes");
  for (const auto& e : events) {
    if (e.kind == EventKind::kAccident && (!e.link || !network->contains(*e.link))) {
      throw ConfigError("accident event needs a link that exists in the network");
    }
    if (e.kind == EventKind::kPedestrianGathering && (!e.node || !network->contains(*e.node))) {
      throw ConfigError("pedestrian gathering needs a node that exists in the network");
    }
    if (e.onset_step < 0 || (e.end_step && *e.end_step <= e.onset_step)) {
      throw ConfigError("event needs onset_step >= 0 and end_step > onset_step");
    }
  }
  if (events_random) {
    const auto& r = *events_random;
    if (r.count < 0 || r.kinds.empty()) throw ConfigError("events_random needs count >= 0 and at least one kind");
  }
  for (const auto& rsu : rsus) {
    if (!network->contains(rsu.node)) throw ConfigError(fmt::format("RSU at unknown node {}", rsu.node.value));
    if (!(rsu.radius_m >= 0.0)) throw ConfigError("RSU radius must be non-negative");
  }
  thresholds.validate();
  latency.validate();
  if (!(background_ped_density >= 0.0) || !(gathering_ped_density >= 0.0)) {
    throw ConfigError("pedestrian densities must be non-negative");
  }
}

namespace {

EventKind parse_kind(const JsonNode& node) {
  auto s = node.as_string();
  if (s == "accident") return EventKind::kAccident;
  if (s == "pedestrian_gathering" || s == "gathering") return EventKind::kPedestrianGathering;
  node.fail(fmt::format("unknown event kind '{}' (accident|pedestrian_gathering)", s));
}

long long parse_step(const JsonNode& ev, const char* step_key, const char* seconds_key, double dt_s) {
  if (ev.has(step_key)) return ev.at(step_key).as_int();
  return std::llround(ev.at(seconds_key).as_double() / dt_s);
}

ScheduledEvent parse_event(const JsonNode& ev, const TrafficNetwork& net, double dt_s) {
  ev.expect_object();
  ScheduledEvent e;
  e.kind = parse_kind(ev.at("kind"));
  if (e.kind == EventKind::kAccident) {
    auto link = ev.at("link");
    link.expect_array();
    if (link.size() != 2) link.fail("link must be a [from, to] pair");
    NodeId from{static_cast<int>(link.at(0).as_int())};
    NodeId to{static_cast<int>(link.at(1).as_int())};
    auto id = net.find_link(from, to);
    if (!id) link.fail(fmt::format("no link {} -> {} in the network", from.value, to.value));
    e.link = id;
  } else {
    NodeId n{static_cast<int>(ev.at("node").as_int())};
    if (!net.contains(n)) ev.at("node").fail(fmt::format("unknown node {}", n.value));
    e.node = n;
  }
  if (!ev.has("onset_step") && !ev.has("onset_s")) ev.fail("event needs 'onset_step' or 'onset_s'");
  e.onset_step = parse_step(ev, "onset_step", "onset_s", dt_s);
  if (e.onset_step < 0) ev.fail("event onset must be non-negative");
  if (ev.has("end_step") || ev.has("end_s")) {
    e.end_step = parse_step(ev, "end_step", "end_s", dt_s);
    if (*e.end_step <= e.onset_step) ev.fail("event must end after its onset");
  }
  return e;
}

}  // namespace

SimulationScenario parse_scenario(const JsonNode& root, const std::filesystem::path& base_dir) {
  root.expect_object();
  SimulationScenario s;

  if (root.has("network_file")) {
    auto node = root.at("network_file");
    std::filesystem::path p = node.as_string();
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) node.fail(fmt::format("network file '{}' not found", p.string()));
    s.network = std::make_shared<const TrafficNetwork>(load_network(p));
  } else if (root.has("network_generate")) {
    auto g = root.at("network_generate");
    g.expect_object();
    GridNetworkOptions o;
    o.rows = static_cast<int>(g.get_int("rows", o.rows));
    o.cols = static_cast<int>(g.get_int("cols", o.cols));
    o.target_links = static_cast<int>(g.get_int("target_links", o.target_links));
    o.spacing_m = g.get_double("spacing_m", o.spacing_m);
    o.jitter_m = g.get_double("jitter_m", o.jitter_m);
    o.seed = static_cast<std::uint64_t>(g.get_int("seed", static_cast<long long>(o.seed)));
    try {
      s.network = std::make_shared<const TrafficNetwork>(generate_grid_network(o));
    } catch (const ConfigError& e) {
      g.fail(e.what());
    }
  } else if (root.has("network")) {
    s.network = std::make_shared<const TrafficNetwork>(parse_network(root.at("network")));
  } else {
    root.fail("scenario needs 'network_file', 'network_generate' or an inline 'network'");
  }
  const auto& net = *s.network;

  if (root.has("sim")) {
    auto sim = root.at("sim");
    sim.expect_object();
    s.dt_s = sim.get_double("dt_s", s.dt_s);
    s.t_sim_s = sim.get_double("t_sim_s", s.t_sim_s);
    s.seed = static_cast<std::uint64_t>(sim.get_int("seed", static_cast<long long>(s.seed)));
    if (!(s.dt_s > 0.0)) sim.at("dt_s").fail("dt_s must be positive");
    if (!(s.t_sim_s > 0.0)) sim.at("t_sim_s").fail("t_sim_s must be positive");
    if (std::abs(static_cast<double>(s.steps()) * s.dt_s - s.t_sim_s) > 1e-9 * s.t_sim_s) {
      sim.fail("t_sim_s must be a multiple of dt_s");
    }
  }

  if (root.has("traffic")) {
    auto t = root.at("traffic");
    t.expect_object();
    s.n_vel = static_cast<int>(t.get_int("n_vel", s.n_vel));
    s.p_user = t.get_double("p_user", s.p_user);
    if (s.n_vel < 0) t.at("n_vel").fail("n_vel must be non-negative");
    if (!(s.p_user >= 0.0 && s.p_user <= 1.0)) t.at("p_user").fail("p_user must lie in [0, 1]");
    if (t.has("spawn")) {
      auto sp = t.at("spawn");
      sp.expect_object();
      s.spawn_horizon_fraction = sp.get_double("horizon_fraction", s.spawn_horizon_fraction);
      if (!(s.spawn_horizon_fraction > 0.0 && s.spawn_horizon_fraction <= 1.0)) {
        sp.at("horizon_fraction").fail("horizon_fraction must lie in (0, 1]");
      }
    }
  }

  if (root.has("events")) {
    auto evs = root.at("events");
    evs.expect_array();
    for (std::size_t i = 0; i < evs.size(); ++i) s.events.push_back(parse_event(evs.at(i), net, s.dt_s));
  }
  if (root.has("events_random")) {
    auto r = root.at("events_random");
    r.expect_object();
    RandomEvents re;
    re.count = static_cast<int>(r.at("count").as_int());
    if (re.count < 0) r.at("count").fail("count must be non-negative");
    if (r.has("kinds")) {
      auto kinds = r.at("kinds");
      kinds.expect_array();
      re.kinds.clear();
      for (std::size_t i = 0; i < kinds.size(); ++i) re.kinds.push_back(parse_kind(kinds.at(i)));
      if (re.kinds.empty()) kinds.fail("kinds must not be empty");
    }
    if (r.has("onset_window_s")) {
      auto w = r.at("onset_window_s");
      w.expect_array();
      if (w.size() != 2) w.fail("onset_window_s must be [min, max]");
      re.onset_min_s = w.at(0).as_double();
      re.onset_max_s = w.at(1).as_double();
      if (!(re.onset_min_s >= 0.0 && *re.onset_max_s >= re.onset_min_s)) w.fail("need 0 <= min <= max");
    }
    if (r.has("duration_s")) {
      re.duration_s = r.at("duration_s").as_double();
      if (!(*re.duration_s > 0.0)) r.at("duration_s").fail("duration_s must be positive");
    }
    s.events_random = re;
  }

  if (root.has("sensing")) {
    auto sensing = root.at("sensing");
    sensing.expect_object();
    if (sensing.has("full_coverage")) s.full_coverage = sensing.at("full_coverage").as_bool();
    if (sensing.has("rsus")) {
      auto rsus = sensing.at("rsus");
      rsus.expect_array();
      for (std::size_t i = 0; i < rsus.size(); ++i) {
        auto r = rsus.at(i);
        r.expect_object();
        NodeId n{static_cast<int>(r.at("node").as_int())};
        if (!net.contains(n)) r.at("node").fail(fmt::format("unknown node {}", n.value));
        double radius = r.get_double("radius_m", 30.0);
        if (!(radius >= 0.0)) r.at("radius_m").fail("radius_m must be non-negative");
        s.rsus.push_back(RsuPlacement{n, radius});
      }
    }
  }

  if (root.has("thresholds")) {
    auto t = root.at("thresholds");
    t.expect_object();
    s.thresholds.d_thre = t.get_double("d_thre", s.thresholds.d_thre);
    s.thresholds.v_thre = t.get_double("v_thre", s.thresholds.v_thre);
    s.thresholds.accident_window_s = t.get_double("accident_window_s", s.thresholds.accident_window_s);
    try {
      s.thresholds.validate();
    } catch (const ConfigError& e) {
      t.fail(e.what());
    }
  }

  if (root.has("latency")) {
    auto lat = root.at("latency");
    s.latency = parse_latency(lat);
    if (lat.has("service_mode")) {
      auto mode = lat.at("service_mode").as_string();
      if (mode == "two_way_v2c") {
        s.service_mode = ServiceLatencyMode::kTwoWayV2c;
      } else if (mode == "single_v2c") {
        s.service_mode = ServiceLatencyMode::kSingleV2c;
      } else {
        lat.at("service_mode").fail("service_mode must be 'two_way_v2c' or 'single_v2c'");
      }
    }
  }

  if (root.has("pedestrians")) {
    auto p = root.at("pedestrians");
    p.expect_object();
    s.background_ped_density = p.get_double("background_density", s.background_ped_density);
    s.gathering_ped_density = p.get_double("gathering_density", s.gathering_ped_density);
  }

  try {
    s.validate();
  } catch (const ConfigError& e) {
    root.fail(e.what());
  }
  return s;
}

SimulationScenario load_scenario(const std::filesystem::path& path) {
  auto src = JsonSource::load(path);
  return parse_scenario(JsonNode(src), path.parent_path());
}

}  // namespace smdt
