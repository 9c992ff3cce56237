// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "traces.hpp"
#include "mpsdn/controller.hpp"
#include "mpsdn/harness.hpp"
#include "mpsdn/resequencer.hpp"
#include "mpsdn/scheduler.hpp"

using namespace mpsdn;
namespace fs = std::filesystem;

namespace tol {
constexpr double kBejHawRatio = 1.7;
constexpr double kTokSydShare = 0.80;
constexpr double kBufferGain = 1.25;   // MDI 0.25
constexpr double kLowMdiSpread = 0.10;  // MDI 0.05
constexpr double kJainEveryRun = 0.5;
constexpr double kJainMedian = 0.7;
constexpr double kDropWithin_s = 4.0;
constexpr double kRecoverShare = 0.80;
constexpr double kRecoverWithin_s = 15.0;
constexpr double kCwndCollapse = 0.25;
constexpr double kWrrFraction = 0.01;
constexpr double kMdiExact = 1e-12;
constexpr double kMaxFlowRel = 1e-9;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome bej_haw() {
  const auto c = compare_singlepath(fixtures::bundled("table2-bej-haw"), 1);
  return {c.ratio >= tol::kBejHawRatio,
          fmt("multipath %.3f Mbit/s, best single %.3f Mbit/s, ratio %.3f (need >= %.2f)", c.multipath_bps / 1e6,
              c.best_single_bps / 1e6, c.ratio, tol::kBejHawRatio)};
}

Outcome tok_syd() {
  const auto c = compare_singlepath(fixtures::bundled("table2-tok-syd"), 1);
  const double share = c.multipath_bps / c.sum_single_bps;
  return {share >= tol::kTokSydShare, fmt("multipath %.3f Mbit/s, sum of singles %.3f Mbit/s, share %.3f (need >= %.2f)",
                                          c.multipath_bps / 1e6, c.sum_single_bps / 1e6, share, tol::kTokSydShare)};
}

Outcome mdi_crossover() {
  const auto cfg = fixtures::bundled("mdi-sweep");
  SweepSpec spec = *cfg.sweep;
  spec.mdi_points = {0.05, 0.25, 0.45};
  const auto res = mdi_sweep(spec, cfg, cfg.seed);
  const auto& low = res.rows[0];
  const auto& mid = res.rows[1];
  const auto& high = res.rows[2];
  const double gain = mid.goodput_buffered_bps / mid.goodput_unbuffered_bps;
  const double spread = std::abs(low.goodput_buffered_bps - low.goodput_unbuffered_bps) /
                        std::max(low.goodput_buffered_bps, low.goodput_unbuffered_bps);
  const bool high_ok = high.goodput_buffered_bps <= high.goodput_single_fast_bps &&
                       high.goodput_unbuffered_bps <= high.goodput_single_fast_bps;
  Outcome o;
  o.pass = gain >= tol::kBufferGain && spread <= tol::kLowMdiSpread && high_ok;
  o.detail = fmt("0.25: buffered/unbuffered %.2f (need >= %.2f); 0.05: spread %.3f (need <= %.2f); "
                 "0.45: %.3f/%.3f vs single %.3f Mbit/s",
                 gain, tol::kBufferGain, spread, tol::kLowMdiSpread, high.goodput_buffered_bps / 1e6,
                 high.goodput_unbuffered_bps / 1e6, high.goodput_single_fast_bps / 1e6);
  return o;
}

Outcome fairness() {
  auto cfg = fixtures::bundled("fairness");
  std::vector<std::string> flows;
  for (const auto& f : cfg.flows) flows.push_back(f.name);
  std::vector<double> means;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto res = run(cfg, seed);
    const auto j = jain_per_interval(res.metrics, flows);
    double sum = 0;
    for (double x : j) sum += x;
    means.push_back(j.empty() ? 0.0 : sum / static_cast<double>(j.size()));
  }
  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  const double median = (sorted[4] + sorted[5]) / 2;
  return {sorted.front() >= tol::kJainEveryRun && median >= tol::kJainMedian,
          fmt("per-run mean Jain min %.3f (need >= %.1f), median %.3f (need >= %.1f)", sorted.front(),
              tol::kJainEveryRun, median, tol::kJainMedian)};
}

bool uses_node(const CandidatePath& p, const std::string& node) {
  return std::any_of(p.hops.begin(), p.hops.end(), [&](const NodeId& n) { return n.str() == node; });
}

Outcome congestion() {
  const auto cfg = fixtures::bundled("congestion-sin-syd");
  const double flood_start = 10.0;
  const auto res = run(cfg, cfg.seed);

  double drop_time = -1;
  for (const auto& ev : res.plan_events)
    if (ev.time_s >= flood_start &&
        std::none_of(ev.plan.paths.begin(), ev.plan.paths.end(), [](const auto& p) { return uses_node(p, "SIN"); })) {
      drop_time = ev.time_s;
      break;
    }
  if (drop_time < 0) return {false, "congested path never dropped"};

  // Single-path reference over the surviving direct link.
  const auto candidates = max_flow_paths(cfg.topology, NodeId("TOK"), NodeId("SYD"), cfg.controller.max_paths);
  std::size_t direct = candidates.size();
  for (std::size_t j = 0; j < candidates.size(); ++j)
    if (candidates[j].label() == "TOK-SYD") direct = j;
  if (direct == candidates.size()) return {false, "direct TOK-SYD candidate missing"};
  RunOptions pinned;
  pinned.pinned_path = direct;
  const double surviving_bps = tcp_goodput_bps(run(cfg, cfg.seed, pinned));

  double best_after = 0;
  double pre_flood_cwnd = 0;
  double congested_cwnd_min = 1e300;
  for (const auto& r : res.metrics) {
    if (r.flow != "bulk") continue;
    if (r.t_start_s >= drop_time - 1e-9 && r.t_end_s <= drop_time + tol::kRecoverWithin_s + 1e-9)
      best_after = std::max(best_after, r.goodput_bps);
    if (r.t_end_s <= flood_start + 1e-9) pre_flood_cwnd = r.cwnd_bytes;
    if (r.t_start_s >= flood_start - 1e-9 && r.t_end_s <= drop_time + 1e-9)
      congested_cwnd_min = std::min(congested_cwnd_min, r.cwnd_min_bytes);
  }
  const double reaction = drop_time - flood_start;
  Outcome o;
  o.pass = reaction <= tol::kDropWithin_s && best_after >= tol::kRecoverShare * surviving_bps &&
           congested_cwnd_min <= tol::kCwndCollapse * pre_flood_cwnd;
  o.detail = fmt("dropped %.1f s after flood (need <= %.0f); best interval %.3f vs surviving path %.3f Mbit/s "
                 "(need >= %.2fx); cwnd min %.0f vs pre-flood %.0f B",
                 reaction, tol::kDropWithin_s, best_after / 1e6, surviving_bps / 1e6, tol::kRecoverShare,
                 congested_cwnd_min, pre_flood_cwnd);
  return o;
}

Outcome max_flow_oracle() {
  std::mt19937_64 rng(6006);
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = oracle::random_graph(rng, 8, 12);
    const double expected = static_cast<double>(oracle::min_cut(g)) * 1e6;
    double total = 0;
    try {
      for (const auto& p : max_flow_paths(oracle::to_topology(g), oracle::node_name(g.src), oracle::node_name(g.dst), 0))
        total += p.allocated_rate_bps;
    } catch (const NoPathError&) {
    }
    if (std::abs(total - expected) > tol::kMaxFlowRel * std::max(1.0, expected)) ++bad;
  }
  return {bad == 0, fmt("%d of 200 graphs disagree with the brute-force cut", bad)};
}

Outcome reseq_order() {
  std::mt19937_64 rng(7007);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = std::uniform_int_distribution<std::size_t>(kMinThreshold, 64)(rng);
    const auto in = traces::jitter(traces::segments(static_cast<std::uint32_t>(rng()), 200), static_cast<double>(t), rng);
    if (traces::max_displacement(in) > t) {
      ++bad;
      continue;
    }
    FlowResequencer r(t, 2 * t);
    std::vector<Packet> out;
    for (const auto& p : in) {
      auto res = r.on_packet(p);
      out.insert(out.end(), res.forwarded.begin(), res.forwarded.end());
    }
    bool ok = out.size() == in.size();
    for (std::size_t i = 0; ok && i < out.size(); ++i) ok = out[i].uid == i;
    for (std::size_t i = 1; ok && i < out.size(); ++i) ok = seq_lt(out[i - 1].seq, out[i].seq);
    bad += !ok;
  }
  return {bad == 0, fmt("%d of 1000 permutations not restored", bad)};
}

Outcome reseq_conservation() {
  std::mt19937_64 rng(8008);
  int bad = 0;
  std::size_t flushes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = std::uniform_int_distribution<std::size_t>(kMinThreshold, 16)(rng);
    const auto s = 2 * t;
    const double loss = std::uniform_real_distribution<double>(0.0, 0.10)(rng);
    const auto sent = traces::segments(static_cast<std::uint32_t>(rng()), 200);
    const auto in = traces::drop(traces::jitter(sent, 3.0 * static_cast<double>(t), rng), loss, rng);
    FlowResequencer r(t, s);
    std::map<std::uint64_t, int> seen;
    bool ok = true;
    for (const auto& p : in) {
      auto res = r.on_packet(p);
      ok = ok && r.occupancy() <= s;
      if (res.action == ReseqAction::ThresholdFlush) {
        ++flushes;
        ok = ok && r.occupancy() == 0;
      }
      for (const auto& f : res.forwarded) ++seen[f.uid];
    }
    for (const auto& f : r.flush_flow()) ++seen[f.uid];
    ok = ok && seen.size() == in.size();
    for (const auto& p : in) ok = ok && seen[p.uid] == 1;
    bad += !ok;
  }
  return {bad == 0 && flushes > 0, fmt("%d of 200 traces violated; %zu threshold flushes exercised", bad, flushes)};
}

Outcome wrr() {
  std::mt19937_64 rng(9009);
  int bad = 0;
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    std::vector<double> w(n);
    double total = 0;
    for (auto& x : w) total += (x = std::uniform_real_distribution<double>(0.05, 1.0)(rng));
    for (auto& x : w) x /= total;
    WrrState s(w);
    std::vector<double> count(n, 0);
    for (int i = 0; i < 10000; ++i) count[s.next_path()] += 1;
    for (std::size_t j = 0; j < n; ++j) {
      const double err = std::abs(count[j] / 10000.0 - w[j]);
      worst = std::max(worst, err);
      bad += err > tol::kWrrFraction;
    }
  }
  // Single weight: every packet on path 0. Equal weights: exactly R/n per round.
  bool exact = true;
  WrrState single({1.0});
  for (int i = 0; i < 1000; ++i) exact = exact && single.next_path() == 0;
  for (std::size_t n = 2; n <= 8; ++n) {
    WrrState eq(std::vector<double>(n, 1.0 / static_cast<double>(n)), 16 * n);
    for (int round = 0; round < 50; ++round) {
      std::vector<std::size_t> c(n, 0);
      for (std::size_t i = 0; i < eq.round_size(); ++i) ++c[eq.next_path()];
      for (auto x : c) exact = exact && x == eq.round_size() / n;
    }
  }
  return {bad == 0 && exact, fmt("worst fraction error %.5f (need <= %.2f); exact single/equal rounds: %s", worst,
                                 tol::kWrrFraction, exact ? "yes" : "no")};
}

Outcome mdi_values() {
  const double a = mdi(std::vector<double>{25, 25});
  const double b = mdi(std::vector<double>{25, 100});
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> d(0.1, 1000.0);
  std::uniform_real_distribution<double> k(0.01, 100.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> p{d(rng), d(rng)};
    const double s = k(rng);
    worst = std::max(worst, std::abs(mdi(p) - mdi(std::vector<double>{s * p[0], s * p[1]})));
  }
  return {std::abs(a) <= tol::kMdiExact && std::abs(b - 0.3) <= tol::kMdiExact && worst <= tol::kMdiExact,
          fmt("mdi(25,25) = %.3g, mdi(25,100) = %.15g, worst scale deviation %.3g", a, b, worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mpsdn-acceptance-determinism";
  fs::remove_all(root);
  std::vector<std::string> differing;
  std::size_t count = 0;
  for (const auto& path : list_scenarios(fixtures::scenario_dir())) {
    const auto cfg = load_scenario_file(path.string());
    ++count;
    fs::path dirs[2];
    for (int i = 0; i < 2; ++i) {
      ExperimentOptions opts;
      opts.out_dir = root;
      opts.run_label = "run" + std::to_string(i);
      opts.baselines = false;
      dirs[i] = run_experiment(cfg, opts).dir;
    }
    for (const char* f : {"metrics.csv", "paths.csv"}) {
      const auto x = slurp(dirs[0] / f);
      if (x.empty() || x != slurp(dirs[1] / f)) differing.push_back(cfg.name + "/" + f);
    }
  }
  fs::remove_all(root);
  std::string names;
  for (const auto& d : differing) names += " " + d;
  return {differing.empty() && count > 0,
          fmt("%zu scenarios, %zu differing files%s", count, differing.size(), names.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"BEJ-HAW aggregation ratio", bej_haw},
      {"TOK-SYD aggregation share", tok_syd},
      {"delay-imbalance crossover", mdi_crossover},
      {"fairness across seeds", fairness},
      {"congestion reaction", congestion},
      {"max-flow oracle", max_flow_oracle},
      {"resequencer order", reseq_order},
      {"resequencer conservation", reseq_conservation},
      {"WRR proportionality", wrr},
      {"MDI values", mdi_values},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %-28s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
