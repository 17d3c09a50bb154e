// Command-line front end: run, sweep, kpi, serve, gen-network.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "smdt/comms.hpp"
#include "smdt/error.hpp"
#include "smdt/harness.hpp"
#include "smdt/scenario.hpp"
#include "smdt/service.hpp"
#include "smdt/sim.hpp"

namespace fs = std::filesystem;
using namespace smdt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("smdt");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SMDT_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("--values: '{}' is not a number", item));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Mesoscopic traffic simulator with a cloud traffic twin and cooperative route planning"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";

  auto* run_cmd = app.add_subcommand("run", "Run one simulation and write metrics.csv");
  std::string twin_journal, routes_journal;
  bool single_v2c = false;
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--twin-journal", twin_journal, "Write per-step twin snapshots (JSON lines)");
  run_cmd->add_option("--routes-journal", routes_journal, "Write issued routes (JSON lines)");
  run_cmd->add_flag("--svc-single-v2c", single_v2c, "Service latency with a single V2C term");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep p_user or the number of events over seeds");
  std::string param = "p_user";
  std::string values;
  int seeds = 20;
  int jobs = 0;
  sweep_cmd->add_option("--scenario", scenario_path, "Base scenario JSON file")->required();
  sweep_cmd->add_option("--param", param, "p_user | events");
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->add_option("--seeds", seeds, "Replicates per value");
  sweep_cmd->add_option("--seed", seed, "Seed base (defaults to the scenario seed)");
  sweep_cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--out", out_dir, "Output directory");
  sweep_cmd->add_flag("--svc-single-v2c", single_v2c, "Service latency with a single V2C term");

  auto* kpi_cmd = app.add_subcommand("kpi", "Monte-Carlo latency and reliability report");
  long long samples = 1000000;
  double v_kmh = 20.0;
  kpi_cmd->add_option("--scenario", scenario_path, "Scenario JSON file with a latency block")->required();
  kpi_cmd->add_option("--samples", samples, "Number of draws per flow");
  kpi_cmd->add_option("--v-kmh", v_kmh, "Free-flow speed for the service deadline");
  kpi_cmd->add_option("--seed", seed, "Override the scenario seed");
  kpi_cmd->add_option("--out", out_dir, "Output directory for kpi.csv");

  auto* serve_cmd = app.add_subcommand("serve", "Line-delimited JSON route-planning service");
  int port = 7878;
  serve_cmd->add_option("--scenario", scenario_path, "Scenario JSON file (network, RSUs, thresholds)")->required();
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));

  auto* gen_cmd = app.add_subcommand("gen-network", "Write a generated grid network as JSON");
  GridNetworkOptions grid;
  std::string network_out = "network.json";
  gen_cmd->add_option("--rows", grid.rows);
  gen_cmd->add_option("--cols", grid.cols);
  gen_cmd->add_option("--links", grid.target_links);
  gen_cmd->add_option("--spacing-m", grid.spacing_m);
  gen_cmd->add_option("--seed", grid.seed);
  gen_cmd->add_option("--out", network_out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) {
      auto scenario = load_scenario(scenario_path);
      if (seed) scenario.seed = *seed;
      if (single_v2c) scenario.service_mode = ServiceLatencyMode::kSingleV2c;
      std::ofstream twin_out, routes_out;
      RunOptions opts;
      if (!twin_journal.empty()) {
        twin_out = open_out(twin_journal);
        opts.twin_journal = &twin_out;
      }
      if (!routes_journal.empty()) {
        routes_out = open_out(routes_journal);
        opts.routes_journal = &routes_out;
      }
      spdlog::info("running {} steps, seed {}", scenario.steps(), scenario.seed);
      auto metrics = run(scenario, opts);
      auto out = open_out(fs::path(out_dir) / "metrics.csv");
      write_metrics_csv(out, metrics);
      std::cout << metrics_csv_header() << '\n' << metrics_csv_row(metrics) << '\n';
    } else if (*sweep_cmd) {
      SweepSpec spec;
      spec.base = load_scenario(scenario_path);
      if (single_v2c) spec.base.service_mode = ServiceLatencyMode::kSingleV2c;
      spec.param = parse_sweep_param(param);
      spec.values = parse_values(values);
      spec.seeds = seeds;
      spec.seed_base = seed.value_or(spec.base.seed);
      spec.jobs = jobs;
      auto runs = run_sweep(spec);
      auto csv = open_out(fs::path(out_dir) / "sweep.csv");
      write_sweep_csv(csv, spec.param, runs);
      auto dat = open_out(fs::path(out_dir) / "sweep.dat");
      write_sweep_dat(dat, spec.param, aggregate(runs));
      write_sweep_dat(std::cout, spec.param, aggregate(runs));
    } else if (*kpi_cmd) {
      if (samples < 1) throw ConfigError("--samples must be at least 1");
      auto scenario = load_scenario(scenario_path);
      if (seed) scenario.seed = *seed;
      auto draws = monte_carlo_latency(scenario.latency, static_cast<std::size_t>(samples), scenario.seed);
      auto report = kpi_report(draws, KpiBudget{}, v_kmh / 3.6);
      auto csv = open_out(fs::path(out_dir) / "kpi.csv");
      csv << kpi_report_csv(report);
      std::cout << kpi_report_text(report);
    } else if (*serve_cmd) {
      auto scenario = load_scenario(scenario_path);
      ServiceCore core(scenario);
      CommandQueue queue([&core](const std::string& line) { return core.handle_line(line); });
      LineServer server(queue, static_cast<std::uint16_t>(port));
      std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
      server.serve();
    } else if (*gen_cmd) {
      auto net = generate_grid_network(grid);
      auto out = open_out(network_out);
      // One element per line keeps the file diffable.
      auto doc = network_to_json(net);
      out << "{\n";
      for (const char* key : {"nodes", "links"}) {
        out << "  \"" << key << "\": [\n";
        const auto& items = doc[key];
        for (std::size_t i = 0; i < items.size(); ++i) out << "    " << items[i].dump() << (i + 1 < items.size() ? ",\n" : "\n");
        out << (key[0] == 'n' ? "  ],\n" : "  ]\n");
      }
      out << "}\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
