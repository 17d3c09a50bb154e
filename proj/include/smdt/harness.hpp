#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smdt/scenario.hpp"
#include "smdt/sim.hpp"

namespace smdt {

enum class SweepParam { kPUser, kEvents };

const char* to_string(SweepParam p);
/// Accepts "p_user" and "events"; throws ConfigError otherwise.
SweepParam parse_sweep_param(const std::string& name);

struct SweepSpec {
  SimulationScenario base;
  SweepParam param = SweepParam::kPUser;
  std::vector<double> values;
  int seeds = 1;
  std::uint64_t seed_base = 1;
  /// Worker threads; 0 picks the hardware concurrency.
  int jobs = 0;

  void validate() const;
};

struct SweepRun {
  std::size_t point = 0;
  double value = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  MetricsSummary metrics;
};

/// Per-value means over the replicates (empty metrics are skipped).
struct SweepAggregate {
  double value = 0.0;
  int runs = 0;
  std::optional<double> travel_cav, travel_unconnected, travel_overall;
  std::optional<double> encounters_cav, encounters_unconnected, encounters_overall;
  std::optional<double> blocking_cav, blocking_unconnected, blocking_overall;
};

/// The scenario run at sweep point `point`, replicate `replicate`.
SimulationScenario sweep_scenario(const SweepSpec& spec, std::size_t point, int replicate);

/// Runs every (value, replicate) pair. Results are ordered by point then
/// replicate regardless of the number of workers. The first failing run's
/// exception is rethrown after all workers stop.
std::vector<SweepRun> run_sweep(const SweepSpec& spec);

std::vector<SweepAggregate> aggregate(const std::vector<SweepRun>& runs);

void write_metrics_csv(std::ostream& out, const MetricsSummary& m);
void write_sweep_csv(std::ostream& out, SweepParam param, const std::vector<SweepRun>& runs);
/// Whitespace-separated columns, '#' header, one line per value.
void write_sweep_dat(std::ostream& out, SweepParam param, const std::vector<SweepAggregate>& agg);

/// Ordinary least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace smdt
