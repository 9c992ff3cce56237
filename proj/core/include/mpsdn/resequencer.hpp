#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpsdn/controller.hpp"

namespace mpsdn {

using FlowId = std::uint32_t;

/// RFC 1982 serial-number comparison on 32-bit sequence space.
constexpr bool seq_lt(std::uint32_t a, std::uint32_t b) {
  return a != b && static_cast<std::int32_t>(a - b) < 0;
}
constexpr bool seq_le(std::uint32_t a, std::uint32_t b) { return a == b || seq_lt(a, b); }

struct SerialLess {
  bool operator()(std::uint32_t a, std::uint32_t b) const { return seq_lt(a, b); }
};

struct Packet {
  FlowId flow_id = 0;
  std::uint32_t seq = 0;
  std::uint32_t size = 0;  // sequence-consuming payload bytes
  bool syn = false;
  double send_time_ms = 0.0;
  double arrival_time_ms = 0.0;
  std::size_t path_taken = 0;
  std::uint64_t uid = 0;  // simulator bookkeeping; ignored by the resequencer

  /// Sequence units the packet occupies: SYN counts as one.
  std::uint32_t span() const noexcept { return syn ? 1u : size; }
};

enum class ReseqAction {
  ForwardSyn,         // (a)
  ForwardDuplicate,   // (b) seq below expected
  ForwardInOrder,     // (c) seq == expected, plus any buffered packets that became contiguous
  ThresholdFlush,     // (d) occupancy passed T: release everything, skip ahead by LRF
  Buffered,           // (e)
  EvictLowest,        // (f) full: lowest buffered packet out, arrival stored
  ForwardOverflow,    // (f) full and arrival is below every buffered packet
  ForwardAck,         // zero-size packet, no state change
};

const char* to_string(ReseqAction a);

struct ReseqResult {
  std::vector<Packet> forwarded;  // in forwarding order
  ReseqAction action = ReseqAction::ForwardInOrder;
};

constexpr std::uint32_t kDefaultLossRecoveryFactor = 20;
constexpr std::size_t kMaxBufferPackets = 1024;
constexpr std::size_t kMinThreshold = 4;

struct ReseqSizing {
  std::size_t threshold = kMinThreshold;  // T
  std::size_t capacity = 2 * kMinThreshold;  // S
};

/// Receiving-edge resequencing buffer for one flow.
///
/// Until the first SYN (or, failing that, the first packet) is seen the
/// buffer adopts that packet's sequence as the expected one.
class FlowResequencer {
 public:
  FlowResequencer(std::size_t threshold, std::size_t capacity,
                  std::uint32_t lrf = kDefaultLossRecoveryFactor);
  explicit FlowResequencer(ReseqSizing sizing, std::uint32_t lrf = kDefaultLossRecoveryFactor)
      : FlowResequencer(sizing.threshold, sizing.capacity, lrf) {}

  ReseqResult on_packet(const Packet& pkt);

  /// Releases every buffered packet in sequence order and forgets the flow.
  std::vector<Packet> flush_flow();

  /// New T and S after a plan change. Buffered packets stay; an over-full
  /// buffer drains through the threshold rule on the next arrival.
  void resize(ReseqSizing sizing);

  std::size_t occupancy() const noexcept { return buffer_.size(); }
  std::size_t threshold() const noexcept { return threshold_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint32_t lrf() const noexcept { return lrf_; }
  bool synchronized() const noexcept { return synced_; }
  std::uint32_t expected() const noexcept { return expected_; }

  /// Lowest buffered sequence number; only meaningful when occupancy() > 0.
  std::uint32_t lowest_buffered() const { return buffer_.begin()->first; }

 private:
  void release_in_order(std::vector<Packet>& out);

  std::size_t threshold_;
  std::size_t capacity_;
  std::uint32_t lrf_;
  std::uint32_t expected_ = 0;
  bool synced_ = false;
  std::multimap<std::uint32_t, Packet, SerialLess> buffer_;
};

/// T = ceil((d_max - d_min) * aggregate_rate / (8 * mss)), clamped to [4, S-1].
std::size_t compute_threshold(const MultipathPlan& plan, std::uint32_t mss, std::size_t capacity);

/// T together with S = 2*T capped at 1024 packets.
ReseqSizing size_buffer(const MultipathPlan& plan, std::uint32_t mss);

}  // namespace mpsdn
