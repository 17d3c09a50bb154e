#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "smdt/json_source.hpp"
#include "smdt/rng.hpp"

namespace smdt {

enum class LatencyDist { kUniform, kTriangular };

/// One latency random variable, in milliseconds.
struct LatencySpec {
  double min_ms = 0.0;
  double max_ms = 0.0;
  LatencyDist dist = LatencyDist::kUniform;
  /// Target mean for the triangular form; the mode is 3*mean - min - max,
  /// clamped into [min, max].
  std::optional<double> mean_ms;

  static LatencySpec fixed(double ms) { return LatencySpec{ms, ms, LatencyDist::kUniform, std::nullopt}; }
  static LatencySpec uniform(double lo, double hi) { return LatencySpec{lo, hi, LatencyDist::kUniform, std::nullopt}; }

  double sample_ms(Rng& rng) const;
  void validate(const std::string& name) const;
};

/// Communication and computation delays of the two cloud processes plus the
/// packet delivery rates of the RSU upload (SSMS) and CAV exchange
/// (information sharing) flows.
struct LatencyModel {
  LatencySpec rsu;            // edge detection at the RSU
  LatencySpec i2c;            // RSU -> cloud, one way
  LatencySpec v2c;            // CAV <-> cloud, one way
  LatencySpec cloud_monitor;  // cloud traffic monitoring
  LatencySpec cloud_plan;     // cloud route planning
  LatencySpec local;          // on-board localization
  LatencySpec exe;            // route loading and execution
  double pdr_ssms = 1.0;
  double pdr_info = 1.0;

  /// Measured ranges from the field deployment, uniform over [min, max].
  static LatencyModel field_measured();
  /// Every sampler pinned at the measured maximum / minimum.
  static LatencyModel pinned_max();
  static LatencyModel pinned_min();
  static LatencyModel zero();

  void validate() const;
};

/// Reads a latency block:
/// {"rsu": {"min_ms", "max_ms", "dist", "mean_ms"}, "i2c": ..., "v2c": ...,
///  "cloud_monitor": ..., "cloud_plan": ..., "local": ..., "exe": ...,
///  "pdr_ssms": p, "pdr_info": p}. Missing flows keep the measured defaults.
LatencyModel parse_latency(const JsonNode& node);

enum class ServiceLatencyMode {
  kTwoWayV2c,     // T_local + T_exe + T_cloud + 2 T_V2C
  kSingleV2c,     // the tabulated total, which counts T_V2C once
};

/// T_dt = T_RSU + T_I2C, in seconds.
double sample_dt_latency(const LatencyModel& model, Rng& rng);

/// T_svc in seconds; T_cloud is monitoring plus planning.
double sample_service_latency(const LatencyModel& model, Rng& rng,
                              ServiceLatencyMode mode = ServiceLatencyMode::kTwoWayV2c);

/// Service deadline S_thre / v_free = 0.164 v_free seconds.
double service_deadline_s(double v_free_mps);

/// True iff t_svc <= 0.164 v_free.
bool check_deadline(double t_svc_s, double v_free_mps);

/// Bernoulli(pdr) delivery draw.
bool deliver(double pdr, Rng& rng);

struct KpiBudget {
  double ssms_e2e_max_ms = 10.0;
  double info_e2e_max_ms = 100.0;
  double ssms_reliability_min = 0.95;

  double service_deadline_s(double v_free_mps) const { return smdt::service_deadline_s(v_free_mps); }
};

struct LatencySamples {
  std::vector<double> i2c_ms;
  std::vector<double> v2c_ms;
  std::vector<double> dt_ms;
  std::vector<double> svc_ms;
  std::vector<double> svc_single_ms;
  std::size_t ssms_sent = 0;
  std::size_t ssms_delivered = 0;
};

/// Draws `n` samples of every flow and `n` SSMS deliveries.
LatencySamples monte_carlo_latency(const LatencyModel& model, std::size_t n, std::uint64_t seed);

struct FlowStats {
  std::string flow;
  double max_ms = 0.0;
  double min_ms = 0.0;
  double mean_ms = 0.0;
  std::size_t count = 0;
  /// Budget in ms, when the flow has one.
  std::optional<double> budget_ms;
  bool pass = true;
};

struct KpiReport {
  std::vector<FlowStats> flows;  // ssms_e2e, info_e2e, t_dt, t_svc[, t_svc_single]
  double v_free_mps = 0.0;
  double deadline_ms = 0.0;
  /// max(T_dt) < min(T_svc).
  bool dt_below_svc = false;
  std::optional<double> ssms_pdr;
  std::optional<bool> ssms_reliability_pass;

  const FlowStats& flow(const std::string& name) const;
  bool all_pass() const;
};

/// Per-flow max/min/mean with budget verdicts. Throws ReportError when a
/// required flow has no samples.
KpiReport kpi_report(const LatencySamples& samples, const KpiBudget& budget, double v_free_mps);

std::string kpi_report_csv(const KpiReport& report);
std::string kpi_report_text(const KpiReport& report);

}  // namespace smdt
