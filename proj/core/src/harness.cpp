#include "mpsdn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>

#include <json.hpp>

#include "mpsdn/controller.hpp"

namespace mpsdn {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void ScenarioOverrides::apply(ScenarioConfig& cfg) const {
  if (seed) cfg.seed = *seed;
  if (duration_s) cfg.duration_s = *duration_s;
  if (reorder_threshold) cfg.controller.reorder_threshold = *reorder_threshold;
  if (aggregation_cutoff) cfg.controller.aggregation_cutoff = *aggregation_cutoff;
  if (poll_interval_ms) cfg.controller.poll_interval_ms = *poll_interval_ms;
  if (max_paths) cfg.controller.max_paths = *max_paths;
  if (wrr_round_size) cfg.wrr_round_size = *wrr_round_size;
  cfg.validate();
}

double tcp_goodput_bps(const RunResult& run) {
  double sum = 0;
  for (const auto& f : run.flows)
    if (f.type == "tcp") sum += f.goodput_bps;
  return sum;
}

Comparison compare_singlepath(const ScenarioConfig& cfg, std::uint64_t seed) {
  Comparison c;
  std::vector<std::string> labels;
  auto tcp = std::find_if(cfg.flows.begin(), cfg.flows.end(), [](const FlowSpec& f) { return f.type == FlowType::Tcp; });
  if (tcp != cfg.flows.end())
    for (const auto& p : max_flow_paths(cfg.topology, tcp->src, tcp->dst, cfg.controller.max_paths))
      labels.push_back(p.label());

  auto multipath = std::async(std::launch::async, [&] { return run(cfg, seed); });
  std::vector<std::future<RunResult>> pinned;
  for (std::size_t j = 0; j < labels.size(); ++j)
    pinned.push_back(std::async(std::launch::async, [&cfg, seed, j] {
      RunOptions opts;
      opts.pinned_path = j;
      return run(cfg, seed, opts);
    }));

  c.multipath = multipath.get();
  c.multipath_bps = tcp_goodput_bps(c.multipath);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    c.pinned.push_back(pinned[j].get());
    const double bps = tcp_goodput_bps(c.pinned.back());
    c.baselines.push_back({labels[j], bps});
    c.best_single_bps = std::max(c.best_single_bps, bps);
    c.sum_single_bps += bps;
  }
  c.ratio = c.best_single_bps > 0 ? c.multipath_bps / c.best_single_bps : 0;
  return c;
}

ScenarioConfig sweep_point_scenario(const SweepSpec& spec, double mdi_point, const ScenarioConfig& base) {
  ScenarioConfig cfg;
  cfg.name = base.name;
  cfg.tcp = base.tcp;
  cfg.wrr_round_size = base.wrr_round_size;
  cfg.lrf = base.lrf;
  cfg.interval_ms = base.interval_ms;
  cfg.controller = base.controller;
  cfg.duration_s = spec.flow_seconds;
  cfg.seed = base.seed;
  const std::vector<double> latencies{spec.base_latency_ms, delay_for_mdi(spec.base_latency_ms, mdi_point)};
  cfg.topology = two_path_topology(spec.capacities_mbps, latencies);
  FlowSpec f;
  f.name = "tcp";
  f.src = NodeId("SRC");
  f.dst = NodeId("DST");
  cfg.flows.push_back(f);
  return cfg;
}

namespace {

std::string point_tag(double mdi_point) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mdi%.3f", mdi_point);
  return buf;
}

void rename_flows(std::vector<MetricsRecord>& records, const std::string& prefix) {
  for (auto& r : records) r.flow = prefix + "/" + r.flow;
}

}  // namespace

SweepResult mdi_sweep(const SweepSpec& spec, const ScenarioConfig& base, std::uint64_t seed) {
  struct PointRuns {
    std::future<RunResult> buffered, unbuffered, single;
  };
  std::vector<ScenarioConfig> buffered_cfgs, unbuffered_cfgs;
  for (double m : spec.mdi_points) {
    ScenarioConfig b = sweep_point_scenario(spec, m, base);
    b.controller.reorder_threshold = 0.0;
    b.controller.aggregation_cutoff = 0.5;
    ScenarioConfig u = b;
    u.controller.reorder_threshold = 0.5;
    buffered_cfgs.push_back(std::move(b));
    unbuffered_cfgs.push_back(std::move(u));
  }
  std::vector<PointRuns> runs(spec.mdi_points.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& b = buffered_cfgs[i];
    const auto& u = unbuffered_cfgs[i];
    runs[i].buffered = std::async(std::launch::async, [&b, seed] { return run(b, seed); });
    runs[i].unbuffered = std::async(std::launch::async, [&u, seed] { return run(u, seed); });
    runs[i].single = std::async(std::launch::async, [&u, seed] {
      RunOptions opts;
      opts.pinned_path = 0;  // candidates are delay-ordered: 0 is the fast path
      return run(u, seed, opts);
    });
  }

  SweepResult out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double m = spec.mdi_points[i];
    SweepRow row;
    row.mdi = m;
    row.fast_delay_ms = spec.base_latency_ms;
    row.slow_delay_ms = delay_for_mdi(spec.base_latency_ms, m);
    const std::string tag = point_tag(m);
    for (auto [fut, mode, dest] : {std::tuple{&runs[i].buffered, "buffered", &row.goodput_buffered_bps},
                                   std::tuple{&runs[i].unbuffered, "unbuffered", &row.goodput_unbuffered_bps},
                                   std::tuple{&runs[i].single, "single", &row.goodput_single_fast_bps}}) {
      RunResult r = fut->get();
      *dest = tcp_goodput_bps(r);
      rename_flows(r.metrics, tag + "/" + mode);
      out.metrics.insert(out.metrics.end(), r.metrics.begin(), r.metrics.end());
    }
    out.rows.push_back(row);
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

ordered_json plan_to_json(const MultipathPlan& plan) {
  ordered_json paths = ordered_json::array();
  for (std::size_t j = 0; j < plan.paths.size(); ++j) {
    const auto& p = plan.paths[j];
    paths.push_back({{"path", p.label()},
                     {"rate_bps", p.allocated_rate_bps},
                     {"delay_ms", p.path_delay_ms},
                     {"weight", plan.weights.at(j)}});
  }
  ordered_json j{{"paths", paths},
                 {"mdi", plan.mdi},
                 {"reorder_buffer", plan.reorder_buffer_enabled},
                 {"single_path_fallback", plan.single_path_fallback}};
  if (!plan.fallback_reason.empty()) j["fallback_reason"] = plan.fallback_reason;
  return j;
}

ordered_json run_to_json(const RunResult& r) {
  ordered_json flows = ordered_json::array();
  for (const auto& f : r.flows)
    flows.push_back({{"name", f.name},
                     {"type", f.type},
                     {"demand", f.demand},
                     {"start_s", f.start_s},
                     {"stop_s", f.stop_s},
                     {"bytes_delivered", f.bytes_delivered},
                     {"goodput_bps", f.goodput_bps},
                     {"retransmissions", f.retransmissions},
                     {"fast_retransmits", f.fast_retransmits},
                     {"timeouts", f.timeouts},
                     {"drops", f.drops}});
  ordered_json plans = ordered_json::array();
  for (const auto& ev : r.plan_events) {
    ordered_json j{{"time_s", ev.time_s}, {"demand", ev.demand}, {"degraded", ev.degraded}};
    j["plan"] = plan_to_json(ev.plan);
    if (!ev.dropped.empty()) j["dropped"] = ev.dropped;
    if (!ev.readmitted.empty()) j["readmitted"] = ev.readmitted;
    if (ev.reseq) j["reseq"] = {{"threshold", ev.reseq->threshold}, {"capacity", ev.reseq->capacity}};
    plans.push_back(std::move(j));
  }
  ordered_json links = ordered_json::array();
  for (const auto& l : r.links)
    if (l.packets_in > 0)
      links.push_back({{"link", l.label},
                       {"packets_in", l.packets_in},
                       {"delivered", l.delivered},
                       {"queue_drops", l.queue_drops},
                       {"random_drops", l.random_drops}});
  return {{"flows", flows}, {"plan_decisions", plans}, {"links", links}};
}

void write_text(const fs::path& path, const std::string& header, const std::string& body) {
  std::ofstream out(path);
  out << header << body;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& cfg, const ExperimentOptions& options) {
  cfg.validate();
  ExperimentResult res;
  res.dir = options.out_dir / (cfg.name.empty() ? "unnamed" : cfg.name) /
            (options.run_label.empty() ? utc_timestamp() : options.run_label);
  fs::create_directories(res.dir);

  ordered_json summary{{"schema_version", kMetricsSchemaVersion},
                       {"scenario", cfg.name},
                       {"seed", cfg.seed},
                       {"duration_s", cfg.duration_s}};
  if (!cfg.description.empty()) summary["description"] = cfg.description;
  summary["controller"] = {{"reorder_threshold", cfg.controller.reorder_threshold},
                           {"aggregation_cutoff", cfg.controller.aggregation_cutoff},
                           {"poll_interval_ms", cfg.controller.poll_interval_ms},
                           {"max_paths", cfg.controller.max_paths},
                           {"wrr_round_size", cfg.wrr_round_size},
                           {"lrf", cfg.lrf}};

  std::vector<MetricsRecord> metrics;
  if (cfg.sweep) {
    res.sweep = mdi_sweep(*cfg.sweep, cfg, cfg.seed);
    metrics = res.sweep->metrics;
    ordered_json rows = ordered_json::array();
    std::string csv = "mdi,fast_delay_ms,slow_delay_ms,goodput_buffered_bps,goodput_unbuffered_bps,goodput_single_fast_bps\n";
    for (const auto& r : res.sweep->rows) {
      rows.push_back({{"mdi", r.mdi},
                      {"fast_delay_ms", r.fast_delay_ms},
                      {"slow_delay_ms", r.slow_delay_ms},
                      {"goodput_buffered_bps", r.goodput_buffered_bps},
                      {"goodput_unbuffered_bps", r.goodput_unbuffered_bps},
                      {"goodput_single_fast_bps", r.goodput_single_fast_bps}});
      char line[256];
      std::snprintf(line, sizeof line, "%.4f,%.3f,%.3f,%.1f,%.1f,%.1f\n", r.mdi, r.fast_delay_ms, r.slow_delay_ms,
                    r.goodput_buffered_bps, r.goodput_unbuffered_bps, r.goodput_single_fast_bps);
      csv += line;
    }
    summary["sweep"] = rows;
    write_text(res.dir / "sweep.csv", "# schema_version=" + std::to_string(kMetricsSchemaVersion) + "\n", csv);
  } else {
    RunOptions ro;
    ro.trace = options.trace;
    ro.trace_reseq = options.trace_reseq;
    const bool has_tcp =
        std::any_of(cfg.flows.begin(), cfg.flows.end(), [](const FlowSpec& f) { return f.type == FlowType::Tcp; });
    if (options.baselines && has_tcp && !ro.trace && !ro.trace_reseq) {
      res.comparison = compare_singlepath(cfg, cfg.seed);
      res.run = res.comparison->multipath;
    } else {
      res.run = run(cfg, cfg.seed, ro);
    }
    metrics = res.run.metrics;
    summary.update(run_to_json(res.run));
    summary["aggregate_goodput_bps"] = tcp_goodput_bps(res.run);

    std::vector<std::string> tcp_flows;
    for (const auto& f : cfg.flows)
      if (f.type == FlowType::Tcp) tcp_flows.push_back(f.name);
    if (tcp_flows.size() > 1) {
      const auto jain = jain_per_interval(res.run.metrics, tcp_flows);
      double mean = 0;
      for (double x : jain) mean += x;
      if (!jain.empty()) summary["jain"] = {{"intervals", jain.size()}, {"mean", mean / jain.size()}};
    }
    if (res.comparison) {
      ordered_json base = ordered_json::array();
      for (const auto& b : res.comparison->baselines) base.push_back({{"path", b.path}, {"goodput_bps", b.goodput_bps}});
      summary["single_path_baselines"] = base;
      summary["best_single_bps"] = res.comparison->best_single_bps;
      summary["sum_single_bps"] = res.comparison->sum_single_bps;
      summary["multipath_over_best_single"] = res.comparison->ratio;
    }
    if (options.trace) {
      write_text(res.dir / "trace.log", "# time_ms,flow,seq,path,event\n", res.run.trace);
      write_text(res.dir / "seqtrace.csv", "time_s,flow,seq\n", res.run.seq_trace);
    }
    if (options.trace_reseq) write_text(res.dir / "reseq.log", "# time_ms,flow,seq,action,occupancy\n", res.run.reseq_trace);
  }

  {
    std::ofstream m(res.dir / "metrics.csv");
    write_metrics_csv(m, metrics);
    std::ofstream p(res.dir / "paths.csv");
    write_path_metrics_csv(p, metrics);
    if (!m || !p) throw std::runtime_error("cannot write metrics under " + res.dir.string());
  }
  res.summary_json = summary.dump(2) + "\n";
  write_text(res.dir / "summary.json", "", res.summary_json);
  return res;
}

std::optional<fs::path> find_scenario(const std::string& name, const std::vector<fs::path>& dirs) {
  const fs::path direct(name);
  if (fs::is_regular_file(direct)) return direct;
  for (const auto& d : dirs) {
    const fs::path candidate = d / (name + ".scn");
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

std::vector<fs::path> list_scenarios(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".scn") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mpsdn
