#pragma once

// Experiment driver: overrides, single-path baselines, the delay-imbalance
// sweep, and the on-disk results layout.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpsdn/scenario.hpp"
#include "mpsdn/simcore.hpp"

namespace mpsdn {

/// Command-line style overrides layered on top of a loaded scenario.
struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::optional<double> reorder_threshold;
  std::optional<double> aggregation_cutoff;
  std::optional<double> poll_interval_ms;
  std::optional<std::size_t> max_paths;
  std::optional<std::size_t> wrr_round_size;

  /// Applies the set fields and revalidates. Throws ValidationError.
  void apply(ScenarioConfig& cfg) const;
};

/// Sum of TCP goodput (whole-flow averages) in a run.
double tcp_goodput_bps(const RunResult& run);

struct SinglePathBaseline {
  std::string path;  // label of the pinned candidate
  double goodput_bps = 0;
};

struct Comparison {
  RunResult multipath;
  std::vector<RunResult> pinned;  // one per candidate path, same order as `baselines`
  std::vector<SinglePathBaseline> baselines;
  double multipath_bps = 0;
  double best_single_bps = 0;
  double sum_single_bps = 0;
  double ratio = 0;  // multipath / best single
};

/// Runs the scenario as configured and once per candidate path with every
/// TCP demand pinned to it. Runs execute concurrently.
Comparison compare_singlepath(const ScenarioConfig& cfg, std::uint64_t seed);

struct SweepRow {
  double mdi = 0;
  double fast_delay_ms = 0;
  double slow_delay_ms = 0;
  double goodput_buffered_bps = 0;
  double goodput_unbuffered_bps = 0;
  double goodput_single_fast_bps = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<MetricsRecord> metrics;  // every run, flows named per point and mode
};

/// Two-path scenario whose slow path gives the requested delay imbalance.
ScenarioConfig sweep_point_scenario(const SweepSpec& spec, double mdi_point, const ScenarioConfig& base);

/// For each point: buffered multipath, unbuffered multipath and the fast path
/// alone, all without single-path fallback. Runs execute concurrently.
SweepResult mdi_sweep(const SweepSpec& spec, const ScenarioConfig& base, std::uint64_t seed);

struct ExperimentOptions {
  std::filesystem::path out_dir = "results";
  std::string run_label;  // subdirectory; a UTC timestamp when empty
  bool trace = false;
  bool trace_reseq = false;
  bool baselines = true;  // run single-path baselines for multipath demands
};

struct ExperimentResult {
  std::filesystem::path dir;
  RunResult run;
  std::optional<Comparison> comparison;
  std::optional<SweepResult> sweep;
  std::string summary_json;
};

/// Runs a scenario (or its sweep) and writes metrics.csv, paths.csv,
/// summary.json and any requested traces under out_dir/<name>/<run_label>/.
ExperimentResult run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& options);

/// Bundled scenario search: `name` may be a path or a bare scenario name
/// looked up as <dir>/<name>.scn in each directory.
std::optional<std::filesystem::path> find_scenario(const std::string& name,
                                                   const std::vector<std::filesystem::path>& dirs);

/// Scenario files (*.scn) in `dir`, sorted by name.
std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir);

}  // namespace mpsdn
