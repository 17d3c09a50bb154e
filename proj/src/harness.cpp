#include "smdt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "smdt/error.hpp"

namespace smdt {

const char* to_string(SweepParam p) { return p == SweepParam::kPUser ? "p_user" : "events"; }

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "p_user") return SweepParam::kPUser;
  if (name == "events") return SweepParam::kEvents;
  throw ConfigError(fmt::format("unknown sweep parameter '{}' (p_user|events)", name));
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (seeds < 1) throw ConfigError("sweep needs at least one seed per point");
  for (double v : values) {
    if (param == SweepParam::kPUser && !(v >= 0.0 && v <= 1.0)) {
      throw ConfigError(fmt::format("p_user value {} outside [0, 1]", v));
    }
    if (param == SweepParam::kEvents && (v < 0.0 || v != std::floor(v))) {
      throw ConfigError(fmt::format("events value {} is not a non-negative integer", v));
    }
  }
  base.validate();
}

SimulationScenario sweep_scenario(const SweepSpec& spec, std::size_t point, int replicate) {
  SimulationScenario s = spec.base;
  s.seed = sweep_seed(spec.seed_base, static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(replicate));
  double v = spec.values.at(point);
  if (spec.param == SweepParam::kPUser) {
    s.p_user = v;
  } else {
    RandomEvents re = s.events_random.value_or(RandomEvents{});
    re.count = static_cast<int>(v);
    s.events_random = re;
  }
  return s;
}

std::vector<SweepRun> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRun> runs;
  for (std::size_t p = 0; p < spec.values.size(); ++p) {
    for (int r = 0; r < spec.seeds; ++r) runs.push_back(SweepRun{p, spec.values[p], r, 0, {}});
  }

  unsigned workers = spec.jobs > 0 ? static_cast<unsigned>(spec.jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(runs.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < runs.size() && !failed; i = next++) {
      try {
        auto s = sweep_scenario(spec, runs[i].point, runs[i].replicate);
        runs[i].seed = s.seed;
        runs[i].metrics = run(s);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return runs;
}

namespace {

struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (!v) return;
    sum += *v;
    ++n;
  }
  std::optional<double> get() const { return n > 0 ? std::optional<double>(sum / n) : std::nullopt; }
};

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "nan"; }

}  // namespace

std::vector<SweepAggregate> aggregate(const std::vector<SweepRun>& runs) {
  std::vector<SweepAggregate> out;
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t point = runs[i].point;
    Mean m[9];
    SweepAggregate a;
    a.value = runs[i].value;
    for (; i < runs.size() && runs[i].point == point; ++i) {
      const auto& r = runs[i].metrics;
      m[0].add(r.cav.mean_travel_time_s);
      m[1].add(r.unconnected.mean_travel_time_s);
      m[2].add(r.overall.mean_travel_time_s);
      m[3].add(r.cav.mean_encounters);
      m[4].add(r.unconnected.mean_encounters);
      m[5].add(r.overall.mean_encounters);
      m[6].add(r.cav.blocking_probability);
      m[7].add(r.unconnected.blocking_probability);
      m[8].add(r.overall.blocking_probability);
      ++a.runs;
    }
    a.travel_cav = m[0].get();
    a.travel_unconnected = m[1].get();
    a.travel_overall = m[2].get();
    a.encounters_cav = m[3].get();
    a.encounters_unconnected = m[4].get();
    a.encounters_overall = m[5].get();
    a.blocking_cav = m[6].get();
    a.blocking_unconnected = m[7].get();
    a.blocking_overall = m[8].get();
    out.push_back(a);
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const MetricsSummary& m) {
  out << metrics_csv_header() << '\n' << metrics_csv_row(m) << '\n';
}

void write_sweep_csv(std::ostream& out, SweepParam param, const std::vector<SweepRun>& runs) {
  out << "param,value,replicate,seed," << metrics_csv_header() << '\n';
  for (const auto& r : runs) {
    out << fmt::format("{},{:.6g},{},{},", to_string(param), r.value, r.replicate, r.seed) << metrics_csv_row(r.metrics)
        << '\n';
  }
  for (const auto& a : aggregate(runs)) {
    out << fmt::format("{},{:.6g},mean,,{},{},{},{},{},{},{},{},{}\n", to_string(param), a.value, cell(a.travel_cav),
                       cell(a.travel_unconnected), cell(a.travel_overall), cell(a.encounters_cav),
                       cell(a.encounters_unconnected), cell(a.encounters_overall), cell(a.blocking_cav),
                       cell(a.blocking_unconnected), cell(a.blocking_overall));
  }
}

void write_sweep_dat(std::ostream& out, SweepParam param, const std::vector<SweepAggregate>& agg) {
  out << "# " << to_string(param)
      << " travel_cav travel_unconnected travel_overall encounters_cav encounters_unconnected encounters_overall"
         " blocking_cav blocking_unconnected blocking_overall\n";
  for (const auto& a : agg) {
    out << fmt::format("{:.6g} {} {} {} {} {} {} {} {} {}\n", a.value, cell(a.travel_cav), cell(a.travel_unconnected),
                       cell(a.travel_overall), cell(a.encounters_cav), cell(a.encounters_unconnected),
                       cell(a.encounters_overall), cell(a.blocking_cav), cell(a.blocking_unconnected),
                       cell(a.blocking_overall));
  }
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractViolation("ls_slope needs two equal-length series of >= 2 points");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ContractViolation("ls_slope needs at least two distinct x values");
  return sxy / sxx;
}

}  // namespace smdt
