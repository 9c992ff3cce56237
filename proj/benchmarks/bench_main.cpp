#include <benchmark/benchmark.h>

#include <random>

#include "mpsdn/controller.hpp"
#include "mpsdn/resequencer.hpp"
#include "mpsdn/scenario.hpp"
#include "mpsdn/scheduler.hpp"
#include "mpsdn/simcore.hpp"

using namespace mpsdn;

namespace {

const char* kBackbone = R"(
nodes { BEJ SHA TOK HAW HKG MAN SIN SYD SEO TPE }
link BEJ <-> SHA { capacity_mbps = 10  latency_ms = 15 }
link SHA <-> TOK { capacity_mbps = 10  latency_ms = 30 }
link TOK <-> HAW { capacity_mbps = 10  latency_ms = 50 }
link BEJ <-> HKG { capacity_mbps = 10  latency_ms = 30 }
link HKG <-> MAN { capacity_mbps = 10  latency_ms = 20 }
link MAN <-> HAW { capacity_mbps = 10  latency_ms = 45 }
link TOK <-> SIN { capacity_mbps = 10  latency_ms = 35 }
link SIN <-> SYD { capacity_mbps = 10  latency_ms = 25 }
link TOK <-> SYD { capacity_mbps = 20  latency_ms = 60 }
link HKG <-> SIN { latency_ms = 30 }
link BEJ <-> SEO { latency_ms = 20 }
link SEO <-> TOK { latency_ms = 40 }
link SHA <-> HKG { latency_ms = 25 }
link SHA <-> TPE { latency_ms = 25 }
link TPE <-> MAN { latency_ms = 30 }
link TPE <-> HKG { latency_ms = 15 }
)";

void BM_MaxFlowBackbone(benchmark::State& state) {
  const auto topo = load_topology(kBackbone);
  const NodeId src("BEJ"), dst("SYD");
  for (auto _ : state) benchmark::DoNotOptimize(max_flow_paths(topo, src, dst, 0));
}
BENCHMARK(BM_MaxFlowBackbone);

void BM_WrrNextPath(benchmark::State& state) {
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + static_cast<double>(i);
  WrrState s(w);
  for (auto _ : state) benchmark::DoNotOptimize(s.next_path());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WrrNextPath)->Arg(2)->Arg(8);

void BM_ResequencerJitteredStream(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, static_cast<double>(t));
  std::vector<std::pair<double, std::uint32_t>> keyed;
  for (std::uint32_t i = 0; i < 4096; ++i) keyed.emplace_back(i + u(rng), 1 + i * 1448);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Packet> stream;
  for (const auto& [k, seq] : keyed) {
    Packet p;
    p.seq = seq;
    p.size = 1448;
    stream.push_back(p);
  }
  for (auto _ : state) {
    FlowResequencer r(t, 2 * t);
    Packet syn;
    syn.syn = true;
    r.on_packet(syn);
    for (const auto& p : stream) benchmark::DoNotOptimize(r.on_packet(p));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_ResequencerJitteredStream)->Arg(8)->Arg(64);

void BM_SimulateTwoPaths(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.name = "bench";
  cfg.duration_s = static_cast<double>(state.range(0));
  const std::vector<double> cap{10, 10};
  const std::vector<double> lat{25, 40};
  cfg.topology = two_path_topology(cap, lat);
  FlowSpec f;
  f.name = "tcp";
  f.src = NodeId("SRC");
  f.dst = NodeId("DST");
  cfg.flows.push_back(f);
  std::uint64_t events = 0;
  for (auto _ : state) events += run(cfg, 1).events_executed;
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateTwoPaths)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
