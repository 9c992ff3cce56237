#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "traces.hpp"
#include "mpsdn/resequencer.hpp"

using namespace mpsdn;

namespace {

Packet data(std::uint32_t seq, std::uint32_t size = traces::kSegment) {
  Packet p;
  p.seq = seq;
  p.size = size;
  return p;
}

std::vector<std::uint32_t> seqs(const std::vector<Packet>& pkts) {
  std::vector<std::uint32_t> out;
  for (const auto& p : pkts) out.push_back(p.seq);
  return out;
}

MultipathPlan plan_with(std::vector<std::pair<double, double>> rate_mbps_delay_ms) {
  MultipathPlan plan;
  for (auto [rate, delay] : rate_mbps_delay_ms) {
    CandidatePath p;
    p.allocated_rate_bps = rate * 1e6;
    p.path_delay_ms = delay;
    plan.paths.push_back(p);
  }
  return plan;
}

}  // namespace

TEST_SUITE("resequencer") {

TEST_CASE("in-order stream is forwarded immediately") {
  FlowResequencer r(4, 8);
  for (std::uint32_t seq : {1u, 1449u, 2897u}) {
    const auto out = r.on_packet(data(seq));
    CHECK(out.action == ReseqAction::ForwardInOrder);
    CHECK(seqs(out.forwarded) == std::vector<std::uint32_t>{seq});
    CHECK(r.expected() == seq + 1448);
    CHECK(r.occupancy() == 0);
  }
}

TEST_CASE("swapped pair is released in order") {
  FlowResequencer r(4, 8);
  Packet syn;
  syn.seq = 0;
  syn.syn = true;
  CHECK(r.on_packet(syn).action == ReseqAction::ForwardSyn);
  CHECK(r.expected() == 1);
  const auto first = r.on_packet(data(1449));
  CHECK(first.action == ReseqAction::Buffered);
  CHECK(first.forwarded.empty());
  const auto second = r.on_packet(data(1));
  CHECK(second.action == ReseqAction::ForwardInOrder);
  CHECK(seqs(second.forwarded) == std::vector<std::uint32_t>{1, 1449});
  CHECK(r.expected() == 2897);
}

TEST_CASE("duplicates below expected pass straight through") {
  FlowResequencer r(4, 8);
  r.on_packet(data(1));
  r.on_packet(data(1449));
  const std::uint32_t before = r.expected();
  const auto dup = r.on_packet(data(1));
  CHECK(dup.action == ReseqAction::ForwardDuplicate);
  CHECK(seqs(dup.forwarded) == std::vector<std::uint32_t>{1});
  CHECK(r.expected() == before);
}

TEST_CASE("unfilled gap flushes in order once the threshold is passed") {
  const std::uint32_t mss = traces::kSegment;
  FlowResequencer r(4, 8, 20);
  r.on_packet(data(1));  // expected = 1 + mss; that segment never arrives
  for (std::uint32_t k = 2; k <= 5; ++k) CHECK(r.on_packet(data(1 + k * mss)).action == ReseqAction::Buffered);
  CHECK(r.occupancy() == 4);
  const auto flush = r.on_packet(data(1 + 6 * mss));
  CHECK(flush.action == ReseqAction::ThresholdFlush);
  CHECK(seqs(flush.forwarded) ==
        std::vector<std::uint32_t>{1 + 2 * mss, 1 + 3 * mss, 1 + 4 * mss, 1 + 5 * mss, 1 + 6 * mss});
  CHECK(r.occupancy() == 0);
  CHECK(r.expected() == 1 + 6 * mss + mss * 20);
}

TEST_CASE("threshold counts the arriving packet") {
  FlowResequencer r(2, 8);
  r.on_packet(data(1));
  CHECK(r.on_packet(data(1 + 3 * 1448)).action == ReseqAction::Buffered);
  CHECK(r.on_packet(data(1 + 2 * 1448)).action == ReseqAction::Buffered);
  CHECK(r.on_packet(data(1 + 4 * 1448)).action == ReseqAction::ThresholdFlush);
}

TEST_CASE("full buffer evicts its lowest packet or forwards the arrival") {
  // T above S so the capacity rule is reachable.
  FlowResequencer r(10, 3);
  r.on_packet(data(1));
  const std::uint32_t m = traces::kSegment;
  for (std::uint32_t k : {3u, 5u, 7u}) r.on_packet(data(1 + k * m));
  CHECK(r.occupancy() == 3);
  const auto evict = r.on_packet(data(1 + 9 * m));
  CHECK(evict.action == ReseqAction::EvictLowest);
  CHECK(seqs(evict.forwarded) == std::vector<std::uint32_t>{1 + 3 * m});
  CHECK(r.occupancy() == 3);
  CHECK(r.lowest_buffered() == 1 + 5 * m);
  const auto direct = r.on_packet(data(1 + 2 * m));
  CHECK(direct.action == ReseqAction::ForwardOverflow);
  CHECK(seqs(direct.forwarded) == std::vector<std::uint32_t>{1 + 2 * m});
  CHECK(r.occupancy() == 3);
  // Nothing buffered sits below expected.
  CHECK(seq_le(r.expected(), r.lowest_buffered()));
}

TEST_CASE("zero-size packets pass without touching state") {
  FlowResequencer r(4, 8);
  r.on_packet(data(1));
  r.on_packet(data(1 + 2 * 1448));
  const auto before = r.expected();
  const auto ack = r.on_packet(data(12345, 0));
  CHECK(ack.action == ReseqAction::ForwardAck);
  CHECK(ack.forwarded.size() == 1);
  CHECK(r.expected() == before);
  CHECK(r.occupancy() == 1);
}

TEST_CASE("first data packet synchronizes a buffer that missed the SYN") {
  FlowResequencer r(4, 8);
  CHECK_FALSE(r.synchronized());
  const auto out = r.on_packet(data(5000));
  CHECK(out.action == ReseqAction::ForwardInOrder);
  CHECK(r.synchronized());
  CHECK(r.expected() == 5000 + 1448);
}

TEST_CASE("sequence space wraps") {
  FlowResequencer r(8, 16);
  const std::uint32_t isn = 0xFFFFFFFFu - 3000;
  auto pkts = traces::segments(isn, 10);
  r.on_packet(pkts[0]);
  std::vector<Packet> out;
  for (std::size_t i : {2u, 1u, 4u, 3u, 6u, 5u, 8u, 7u, 10u, 9u}) {
    auto res = r.on_packet(pkts[i]);
    out.insert(out.end(), res.forwarded.begin(), res.forwarded.end());
  }
  REQUIRE(out.size() == 10);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].uid == i + 1);
  CHECK(seq_lt(0xFFFFFFF0u, 5u));
  CHECK_FALSE(seq_lt(5u, 0xFFFFFFF0u));
}

TEST_CASE("flush_flow releases the buffer in order and forgets the flow") {
  FlowResequencer r(8, 16);
  CHECK(r.flush_flow().empty());
  r.on_packet(data(1));
  for (std::uint32_t k : {5u, 2u, 3u}) r.on_packet(data(1 + k * 1448));
  const auto out = r.flush_flow();
  CHECK(seqs(out) == std::vector<std::uint32_t>{1 + 2 * 1448, 1 + 3 * 1448, 1 + 5 * 1448});
  CHECK(r.occupancy() == 0);
  CHECK_FALSE(r.synchronized());
}

TEST_CASE("bounded reordering comes out sorted") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = std::uniform_int_distribution<std::size_t>(4, 40)(rng);
    const auto isn = static_cast<std::uint32_t>(rng());
    const auto in = traces::jitter(traces::segments(isn, 200), static_cast<double>(t), rng);
    REQUIRE(traces::max_displacement(in) <= t);
    FlowResequencer r(t, 2 * t);
    std::vector<Packet> out;
    for (const auto& p : in) {
      auto res = r.on_packet(p);
      REQUIRE(res.action != ReseqAction::ThresholdFlush);
      out.insert(out.end(), res.forwarded.begin(), res.forwarded.end());
    }
    REQUIRE(r.occupancy() == 0);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i].uid == i);
  }
}

TEST_CASE("conservation and bounded occupancy under loss") {
  std::mt19937_64 rng(13);
  std::size_t flushes = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto t = std::uniform_int_distribution<std::size_t>(4, 16)(rng);
    const auto s = 2 * t;
    const double loss = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
    const auto sent = traces::segments(static_cast<std::uint32_t>(rng()), 200);
    const auto in = traces::drop(traces::jitter(sent, 3.0 * static_cast<double>(t), rng), loss, rng);
    FlowResequencer r(t, s);
    std::map<std::uint64_t, int> seen;
    for (const auto& p : in) {
      auto res = r.on_packet(p);
      REQUIRE(r.occupancy() <= s);
      if (res.action == ReseqAction::ThresholdFlush) {
        ++flushes;
        REQUIRE(r.occupancy() == 0);
      }
      for (const auto& f : res.forwarded) ++seen[f.uid];
      REQUIRE(seq_le(r.expected(), r.occupancy() ? r.lowest_buffered() : r.expected()));
    }
    for (const auto& f : r.flush_flow()) ++seen[f.uid];
    REQUIRE(seen.size() == in.size());
    for (const auto& p : in) REQUIRE(seen[p.uid] == 1);
  }
  CHECK(flushes > 0);
}

TEST_CASE("threshold sizing") {
  CHECK(compute_threshold(plan_with({{10, 25}, {10, 100}}), 1448, 1024) == 130);
  CHECK(compute_threshold(plan_with({{10, 25}, {10, 25}}), 1448, 1024) == 4);
  CHECK(compute_threshold(plan_with({{10, 25}, {10, 100}}), 1448, 50) == 49);
  const auto sz = size_buffer(plan_with({{10, 25}, {10, 100}}), 1448);
  CHECK(sz.threshold == 130);
  CHECK(sz.capacity == 260);
  const auto big = size_buffer(plan_with({{100, 25}, {100, 400}}), 1448);
  CHECK(big.capacity == kMaxBufferPackets);
  CHECK(big.threshold == kMaxBufferPackets - 1);
}

TEST_CASE("threshold always lies in [4, S-1]") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> rate(0.1, 1000);
  std::uniform_real_distribution<double> delay(0.1, 500);
  for (int i = 0; i < 1000; ++i) {
    const auto plan = plan_with({{rate(rng), delay(rng)}, {rate(rng), delay(rng)}});
    const auto cap = std::uniform_int_distribution<std::size_t>(5, 2048)(rng);
    const auto t = compute_threshold(plan, 1448, cap);
    REQUIRE(t >= kMinThreshold);
    REQUIRE(t < cap);
    const auto sz = size_buffer(plan, 1448);
    REQUIRE(sz.threshold >= kMinThreshold);
    REQUIRE(sz.threshold < sz.capacity);
    REQUIRE(sz.capacity <= kMaxBufferPackets);
  }
}

TEST_CASE("resize keeps buffered packets") {
  FlowResequencer r(8, 16);
  r.on_packet(data(1));
  for (std::uint32_t k : {3u, 4u, 5u}) r.on_packet(data(1 + k * 1448));
  r.resize(ReseqSizing{2, 4});
  CHECK(r.threshold() == 2);
  CHECK(r.capacity() == 4);
  CHECK(r.occupancy() == 3);
  CHECK(r.on_packet(data(1 + 6 * 1448)).action == ReseqAction::ThresholdFlush);
  CHECK_THROWS_AS(r.resize(ReseqSizing{2, 0}), std::invalid_argument);
}

}  // TEST_SUITE
