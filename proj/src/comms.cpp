#include "smdt/comms.hpp"

#include <algorithm>
#include <numeric>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/triangle_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "smdt/error.hpp"
#include "smdt/nav.hpp"

namespace smdt {

double LatencySpec::sample_ms(Rng& rng) const {
  if (max_ms <= min_ms) return min_ms;
  if (dist == LatencyDist::kTriangular) {
    double mean = mean_ms.value_or(0.5 * (min_ms + max_ms));
    double mode = std::clamp(3.0 * mean - min_ms - max_ms, min_ms, max_ms);
    return boost::random::triangle_distribution<double>(min_ms, mode, max_ms)(rng);
  }
  return boost::random::uniform_real_distribution<double>(min_ms, max_ms)(rng);
}

void LatencySpec::validate(const std::string& name) const {
  if (!(min_ms >= 0.0) || !(max_ms >= min_ms)) {
    throw ConfigError(fmt::format("latency '{}' needs 0 <= min_ms <= max_ms", name));
  }
}

LatencyModel LatencyModel::field_measured() {
  auto spec = [](double lo, double hi, double mean) {
    return LatencySpec{lo, hi, LatencyDist::kUniform, mean};
  };
  LatencyModel m;
  m.i2c = spec(1.10, 1.74, 1.37);
  m.rsu = spec(70.01, 153.41, 106.23);
  m.v2c = spec(20.16, 42.13, 32.30);
  m.cloud_monitor = spec(42.72, 56.29, 45.07);
  m.cloud_plan = spec(173.27, 201.07, 183.68);
  m.local = spec(2.56, 10.13, 6.14);
  // Tabulated as max 500.97 / min 501.35; read as the range [500.97, 501.35].
  m.exe = spec(500.97, 501.35, 501.18);
  m.pdr_ssms = 0.9953;
  m.pdr_info = 1.0;
  return m;
}

LatencyModel LatencyModel::pinned_max() {
  LatencyModel m;
  m.i2c = LatencySpec::fixed(1.74);
  m.rsu = LatencySpec::fixed(153.41);
  m.v2c = LatencySpec::fixed(42.13);
  m.cloud_monitor = LatencySpec::fixed(56.29);
  m.cloud_plan = LatencySpec::fixed(201.07);
  m.local = LatencySpec::fixed(10.13);
  m.exe = LatencySpec::fixed(500.97);
  return m;
}

LatencyModel LatencyModel::pinned_min() {
  LatencyModel m;
  m.i2c = LatencySpec::fixed(1.10);
  m.rsu = LatencySpec::fixed(70.01);
  m.v2c = LatencySpec::fixed(20.16);
  m.cloud_monitor = LatencySpec::fixed(42.72);
  m.cloud_plan = LatencySpec::fixed(173.27);
  m.local = LatencySpec::fixed(2.56);
  m.exe = LatencySpec::fixed(500.97);
  return m;
}

LatencyModel LatencyModel::zero() { return LatencyModel{}; }

void LatencyModel::validate() const {
  rsu.validate("rsu");
  i2c.validate("i2c");
  v2c.validate("v2c");
  cloud_monitor.validate("cloud_monitor");
  cloud_plan.validate("cloud_plan");
  local.validate("local");
  exe.validate("exe");
  if (!(pdr_ssms >= 0.0 && pdr_ssms <= 1.0) || !(pdr_info >= 0.0 && pdr_info <= 1.0)) {
    throw ConfigError("pdr_ssms and pdr_info must lie in [0, 1]");
  }
}

namespace {

LatencySpec parse_spec(const JsonNode& node, LatencySpec fallback) {
  node.expect_object();
  LatencySpec s = fallback;
  if (node.has("fixed_ms")) {
    s = LatencySpec::fixed(node.at("fixed_ms").as_double());
  } else {
    s.min_ms = node.get_double("min_ms", s.min_ms);
    s.max_ms = node.get_double("max_ms", s.max_ms);
  }
  if (node.has("mean_ms")) s.mean_ms = node.at("mean_ms").as_double();
  auto dist = node.get_string("dist", s.dist == LatencyDist::kUniform ? "uniform" : "triangular");
  if (dist == "uniform") {
    s.dist = LatencyDist::kUniform;
  } else if (dist == "triangular") {
    s.dist = LatencyDist::kTriangular;
  } else {
    node.at("dist").fail(fmt::format("unknown distribution '{}' (uniform|triangular)", dist));
  }
  if (!(s.min_ms >= 0.0) || !(s.max_ms >= s.min_ms)) node.fail("latency needs 0 <= min_ms <= max_ms");
  return s;
}

}  // namespace

LatencyModel parse_latency(const JsonNode& node) {
  node.expect_object();
  LatencyModel m = LatencyModel::field_measured();
  std::pair<const char*, LatencySpec*> flows[] = {
      {"rsu", &m.rsu},           {"i2c", &m.i2c},     {"v2c", &m.v2c}, {"cloud_monitor", &m.cloud_monitor},
      {"cloud_plan", &m.cloud_plan}, {"local", &m.local}, {"exe", &m.exe},
  };
  for (auto& [key, spec] : flows) {
    if (node.has(key)) *spec = parse_spec(node.at(key), *spec);
  }
  for (const char* key : {"pdr_ssms", "pdr_info"}) {
    if (!node.has(key)) continue;
    double p = node.at(key).as_double();
    if (!(p >= 0.0 && p <= 1.0)) node.at(key).fail("packet delivery rate must lie in [0, 1]");
    (std::string(key) == "pdr_ssms" ? m.pdr_ssms : m.pdr_info) = p;
  }
  return m;
}

double sample_dt_latency(const LatencyModel& model, Rng& rng) {
  double rsu = model.rsu.sample_ms(rng);
  double i2c = model.i2c.sample_ms(rng);
  return (rsu + i2c) / 1000.0;
}

double sample_service_latency(const LatencyModel& model, Rng& rng, ServiceLatencyMode mode) {
  double local = model.local.sample_ms(rng);
  double exe = model.exe.sample_ms(rng);
  double cloud = model.cloud_monitor.sample_ms(rng) + model.cloud_plan.sample_ms(rng);
  double v2c = model.v2c.sample_ms(rng);
  double links = mode == ServiceLatencyMode::kTwoWayV2c ? 2.0 * v2c : v2c;
  return (local + exe + cloud + links) / 1000.0;
}

double service_deadline_s(double v_free_mps) { return kRequestDistanceCoeff * v_free_mps; }

bool check_deadline(double t_svc_s, double v_free_mps) { return t_svc_s <= service_deadline_s(v_free_mps); }

bool deliver(double pdr, Rng& rng) {
  if (pdr >= 1.0) return true;
  if (pdr <= 0.0) return false;
  return boost::random::bernoulli_distribution<double>(pdr)(rng);
}

LatencySamples monte_carlo_latency(const LatencyModel& model, std::size_t n, std::uint64_t seed) {
  LatencySamples s;
  // Each flow draws from its own stream so adding a flow never shifts another.
  Rng i2c_rng = make_rng(seed, Stream::kMonteCarlo);
  Rng v2c_rng(derive_seed(seed, Stream::kMonteCarlo) + 1);
  Rng dt_rng(derive_seed(seed, Stream::kMonteCarlo) + 2);
  Rng svc_rng(derive_seed(seed, Stream::kMonteCarlo) + 3);
  Rng single_rng(derive_seed(seed, Stream::kMonteCarlo) + 4);
  Rng pdr_rng = make_rng(seed, Stream::kSsmsDelivery);
  for (auto* v : {&s.i2c_ms, &s.v2c_ms, &s.dt_ms, &s.svc_ms, &s.svc_single_ms}) v->reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.i2c_ms.push_back(model.i2c.sample_ms(i2c_rng));
    s.v2c_ms.push_back(model.v2c.sample_ms(v2c_rng));
    s.dt_ms.push_back(1000.0 * sample_dt_latency(model, dt_rng));
    s.svc_ms.push_back(1000.0 * sample_service_latency(model, svc_rng, ServiceLatencyMode::kTwoWayV2c));
    s.svc_single_ms.push_back(1000.0 * sample_service_latency(model, single_rng, ServiceLatencyMode::kSingleV2c));
    s.ssms_delivered += deliver(model.pdr_ssms, pdr_rng) ? 1 : 0;
  }
  s.ssms_sent = n;
  return s;
}

const FlowStats& KpiReport::flow(const std::string& name) const {
  for (const auto& f : flows) {
    if (f.flow == name) return f;
  }
  throw ReportError(fmt::format("no flow named '{}' in report", name));
}

bool KpiReport::all_pass() const {
  bool flows_ok = std::all_of(flows.begin(), flows.end(), [](const FlowStats& f) { return f.pass; });
  return flows_ok && dt_below_svc && ssms_reliability_pass.value_or(true);
}

namespace {

FlowStats summarize(std::string name, const std::vector<double>& xs, std::optional<double> budget_ms) {
  if (xs.empty()) throw ReportError(fmt::format("no samples for flow '{}'", name));
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  FlowStats f;
  f.flow = std::move(name);
  f.max_ms = *hi;
  f.min_ms = *lo;
  f.mean_ms = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  f.count = xs.size();
  f.budget_ms = budget_ms;
  f.pass = !budget_ms || f.max_ms <= *budget_ms;
  return f;
}

}  // namespace

KpiReport kpi_report(const LatencySamples& samples, const KpiBudget& budget, double v_free_mps) {
  KpiReport r;
  r.v_free_mps = v_free_mps;
  r.deadline_ms = 1000.0 * budget.service_deadline_s(v_free_mps);
  r.flows.push_back(summarize("ssms_e2e", samples.i2c_ms, budget.ssms_e2e_max_ms));
  r.flows.push_back(summarize("info_e2e", samples.v2c_ms, budget.info_e2e_max_ms));
  r.flows.push_back(summarize("t_dt", samples.dt_ms, std::nullopt));
  r.flows.push_back(summarize("t_svc", samples.svc_ms, r.deadline_ms));
  if (!samples.svc_single_ms.empty()) r.flows.push_back(summarize("t_svc_single_v2c", samples.svc_single_ms, r.deadline_ms));
  r.dt_below_svc = r.flow("t_dt").max_ms < r.flow("t_svc").min_ms;
  if (samples.ssms_sent > 0) {
    r.ssms_pdr = static_cast<double>(samples.ssms_delivered) / static_cast<double>(samples.ssms_sent);
    r.ssms_reliability_pass = *r.ssms_pdr >= budget.ssms_reliability_min;
  }
  return r;
}

std::string kpi_report_csv(const KpiReport& report) {
  std::string out = "flow,count,max_ms,min_ms,mean_ms,budget_ms,pass\n";
  for (const auto& f : report.flows) {
    out += fmt::format("{},{},{:.4f},{:.4f},{:.4f},{},{}\n", f.flow, f.count, f.max_ms, f.min_ms, f.mean_ms,
                       f.budget_ms ? fmt::format("{:.4f}", *f.budget_ms) : std::string(), f.pass ? "pass" : "fail");
  }
  out += fmt::format("dt_below_svc,,,,,,{}\n", report.dt_below_svc ? "pass" : "fail");
  if (report.ssms_pdr) {
    out += fmt::format("ssms_pdr,,{:.6f},,,0.95,{}\n", *report.ssms_pdr,
                       report.ssms_reliability_pass.value_or(false) ? "pass" : "fail");
  }
  return out;
}

std::string kpi_report_text(const KpiReport& report) {
  std::string out = fmt::format("{:<18} {:>10} {:>10} {:>10} {:>10}  verdict\n", "flow", "max ms", "min ms",
                                "mean ms", "budget");
  for (const auto& f : report.flows) {
    out += fmt::format("{:<18} {:>10.2f} {:>10.2f} {:>10.2f} {:>10}  {}\n", f.flow, f.max_ms, f.min_ms, f.mean_ms,
                       f.budget_ms ? fmt::format("{:.2f}", *f.budget_ms) : std::string("-"),
                       f.pass ? "pass" : "FAIL");
  }
  out += fmt::format("deadline at v_free = {:.3f} m/s: {:.2f} ms\n", report.v_free_mps, report.deadline_ms);
  out += fmt::format("max(T_dt) < min(T_svc): {}\n", report.dt_below_svc ? "pass" : "FAIL");
  if (report.ssms_pdr) {
    out += fmt::format("SSMS delivery rate {:.4f} (floor 0.95): {}\n", *report.ssms_pdr,
                       report.ssms_reliability_pass.value_or(false) ? "pass" : "FAIL");
  }
  return out;
}

}  // namespace smdt
