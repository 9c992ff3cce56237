// mpsdn: run bundled or user scenarios through the multipath simulator.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "mpsdn/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitScenarioError = 1;
constexpr int kExitRuntimeError = 2;

std::vector<fs::path> scenario_dirs(const std::string& extra) {
  std::vector<fs::path> dirs;
  if (!extra.empty()) dirs.emplace_back(extra);
  if (const char* env = std::getenv("MPSDN_SCENARIO_DIR")) dirs.emplace_back(env);
  dirs.emplace_back("scenarios");
  dirs.emplace_back(MPSDN_SOURCE_SCENARIO_DIR);
  dirs.emplace_back(MPSDN_INSTALL_SCENARIO_DIR);
  return dirs;
}

void print_run(const mpsdn::ExperimentResult& res) {
  std::printf("results: %s\n", res.dir.string().c_str());
  if (res.sweep) {
    std::printf("%8s %10s %14s %14s %14s\n", "mdi", "d2_ms", "buffered", "unbuffered", "single_fast");
    for (const auto& r : res.sweep->rows)
      std::printf("%8.4f %10.2f %11.3f Mb %11.3f Mb %11.3f Mb\n", r.mdi, r.slow_delay_ms, r.goodput_buffered_bps / 1e6,
                  r.goodput_unbuffered_bps / 1e6, r.goodput_single_fast_bps / 1e6);
    return;
  }
  for (const auto& f : res.run.flows)
    std::printf("flow %-12s %s %-10s goodput %.3f Mbit/s  rtx %llu  timeouts %llu\n", f.name.c_str(), f.type.c_str(),
                f.demand.c_str(), f.goodput_bps / 1e6, static_cast<unsigned long long>(f.retransmissions),
                static_cast<unsigned long long>(f.timeouts));
  if (res.comparison) {
    for (const auto& b : res.comparison->baselines)
      std::printf("single path %-24s %.3f Mbit/s\n", b.path.c_str(), b.goodput_bps / 1e6);
    std::printf("multipath / best single = %.3f\n", res.comparison->ratio);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath forwarding simulator"};
  app.require_subcommand(1);

  std::string scenario_dir;
  app.add_option("--scenario-dir", scenario_dir, "Extra directory searched for bundled scenarios");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file or bundled scenario name");
  std::string scenario;
  mpsdn::ScenarioOverrides ov;
  std::string out_dir = "results";
  std::string run_label;
  bool trace = false;
  bool trace_reseq = false;
  bool no_baselines = false;
  run_cmd->add_option("scenario", scenario, "Scenario file or bundled name")->required();
  run_cmd->add_option("--seed", ov.seed, "Random seed");
  run_cmd->add_option("--duration", ov.duration_s, "Simulated seconds");
  run_cmd->add_option("--out-dir", out_dir, "Results root")->capture_default_str();
  run_cmd->add_option("--label", run_label, "Results subdirectory (default: UTC timestamp)");
  run_cmd->add_flag("--trace", trace, "Write packet trace and sequence trace");
  run_cmd->add_flag("--trace-reseq", trace_reseq, "Write resequencer event log");
  run_cmd->add_flag("--no-baselines", no_baselines, "Skip the pinned single-path runs");
  run_cmd->add_option("--reorder-threshold", ov.reorder_threshold);
  run_cmd->add_option("--aggregation-cutoff", ov.aggregation_cutoff);
  run_cmd->add_option("--poll-interval-ms", ov.poll_interval_ms);
  run_cmd->add_option("--max-paths", ov.max_paths);
  run_cmd->add_option("--wrr-round-size", ov.wrr_round_size);

  // sweep mdi
  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweeps");
  sweep_cmd->require_subcommand(1);
  auto* mdi_cmd = sweep_cmd->add_subcommand("mdi", "Goodput against delay imbalance, buffer on and off");
  mpsdn::SweepSpec spec;
  spec.mdi_points = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
  std::uint64_t sweep_seed = 1;
  std::string sweep_out = "results";
  std::string sweep_label;
  mdi_cmd->add_option("--base-latency", spec.base_latency_ms, "Fast path one-way delay (ms)")->capture_default_str();
  mdi_cmd->add_option("--capacity", spec.capacities_mbps, "Path capacities in Mbit/s (two values)")
      ->expected(2)
      ->capture_default_str();
  mdi_cmd->add_option("--points", spec.mdi_points, "MDI values in [0, 0.5)")->capture_default_str();
  mdi_cmd->add_option("--duration", spec.flow_seconds, "Flow length in seconds")->capture_default_str();
  mdi_cmd->add_option("--seed", sweep_seed)->capture_default_str();
  mdi_cmd->add_option("--out-dir", sweep_out)->capture_default_str();
  mdi_cmd->add_option("--label", sweep_label);

  auto* list_cmd = app.add_subcommand("list", "List bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list_cmd) {
      for (const auto& dir : scenario_dirs(scenario_dir)) {
        auto files = mpsdn::list_scenarios(dir);
        if (files.empty()) continue;
        for (const auto& f : files) {
          const auto cfg = mpsdn::load_scenario_file(f.string());
          std::printf("%-22s %s\n", f.stem().string().c_str(), cfg.description.c_str());
        }
        return 0;
      }
      std::fprintf(stderr, "no scenario directory found\n");
      return kExitScenarioError;
    }

    mpsdn::ScenarioConfig cfg;
    mpsdn::ExperimentOptions opts;
    if (*run_cmd) {
      auto path = mpsdn::find_scenario(scenario, scenario_dirs(scenario_dir));
      if (!path) {
        std::fprintf(stderr, "scenario '%s' not found\n", scenario.c_str());
        return kExitScenarioError;
      }
      cfg = mpsdn::load_scenario_file(path->string());
      ov.apply(cfg);
      opts.out_dir = out_dir;
      opts.run_label = run_label;
      opts.trace = trace;
      opts.trace_reseq = trace_reseq;
      opts.baselines = !no_baselines;
    } else {
      cfg.name = "mdi-sweep";
      cfg.seed = sweep_seed;
      cfg.sweep = spec;
      cfg.validate();
      opts.out_dir = sweep_out;
      opts.run_label = sweep_label;
    }
    print_run(mpsdn::run_experiment(cfg, opts));
  } catch (const mpsdn::ParseError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitScenarioError;
  } catch (const mpsdn::ValidationError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitScenarioError;
  } catch (const mpsdn::NoPathError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitScenarioError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntimeError;
  }
  return 0;
}
