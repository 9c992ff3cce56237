#include "mpsdn/resequencer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpsdn {

const char* to_string(ReseqAction a) {
  switch (a) {
    case ReseqAction::ForwardSyn: return "syn";
    case ReseqAction::ForwardDuplicate: return "duplicate";
    case ReseqAction::ForwardInOrder: return "in_order";
    case ReseqAction::ThresholdFlush: return "threshold_flush";
    case ReseqAction::Buffered: return "buffered";
    case ReseqAction::EvictLowest: return "evict_lowest";
    case ReseqAction::ForwardOverflow: return "overflow";
    case ReseqAction::ForwardAck: return "ack";
  }
  return "?";
}

FlowResequencer::FlowResequencer(std::size_t threshold, std::size_t capacity, std::uint32_t lrf)
    : threshold_(threshold), capacity_(capacity), lrf_(lrf) {
  if (capacity_ == 0) throw std::invalid_argument("FlowResequencer: capacity must be positive");
}

void FlowResequencer::release_in_order(std::vector<Packet>& out) {
  while (!buffer_.empty() && seq_le(buffer_.begin()->first, expected_)) {
    const Packet p = buffer_.begin()->second;
    buffer_.erase(buffer_.begin());
    const std::uint32_t end = p.seq + p.span();
    if (seq_lt(expected_, end)) expected_ = end;
    out.push_back(p);
  }
}

ReseqResult FlowResequencer::on_packet(const Packet& pkt) {
  ReseqResult r;
  if (pkt.syn) {
    expected_ = pkt.seq + 1;
    synced_ = true;
    r.action = ReseqAction::ForwardSyn;
    r.forwarded.push_back(pkt);
    return r;
  }
  if (pkt.size == 0) {
    r.action = ReseqAction::ForwardAck;
    r.forwarded.push_back(pkt);
    return r;
  }
  if (!synced_) {
    expected_ = pkt.seq;
    synced_ = true;
  }

  if (seq_lt(pkt.seq, expected_)) {
    r.action = ReseqAction::ForwardDuplicate;
    r.forwarded.push_back(pkt);
    return r;
  }

  if (pkt.seq == expected_) {
    r.action = ReseqAction::ForwardInOrder;
    r.forwarded.push_back(pkt);
    expected_ = pkt.seq + pkt.size;
    release_in_order(r.forwarded);
    return r;
  }

  if (buffer_.size() + 1 > threshold_) {
    r.action = ReseqAction::ThresholdFlush;
    buffer_.emplace(pkt.seq, pkt);
    for (auto& [seq, p] : buffer_) r.forwarded.push_back(p);
    const Packet& last = r.forwarded.back();
    expected_ = last.seq + last.size * lrf_;
    buffer_.clear();
    return r;
  }

  if (buffer_.size() < capacity_) {
    r.action = ReseqAction::Buffered;
    buffer_.emplace(pkt.seq, pkt);
    return r;
  }

  auto lowest = buffer_.begin();
  if (seq_le(lowest->first, pkt.seq)) {
    r.action = ReseqAction::EvictLowest;
    r.forwarded.push_back(lowest->second);
    buffer_.erase(lowest);
    buffer_.emplace(pkt.seq, pkt);
  } else {
    r.action = ReseqAction::ForwardOverflow;
    r.forwarded.push_back(pkt);
  }
  return r;
}

std::vector<Packet> FlowResequencer::flush_flow() {
  std::vector<Packet> out;
  out.reserve(buffer_.size());
  for (auto& [seq, p] : buffer_) out.push_back(p);
  buffer_.clear();
  synced_ = false;
  expected_ = 0;
  return out;
}

void FlowResequencer::resize(ReseqSizing sizing) {
  if (sizing.capacity == 0) throw std::invalid_argument("FlowResequencer: capacity must be positive");
  threshold_ = sizing.threshold;
  capacity_ = sizing.capacity;
}

std::size_t compute_threshold(const MultipathPlan& plan, std::uint32_t mss, std::size_t capacity) {
  if (mss == 0) throw std::invalid_argument("compute_threshold: mss must be positive");
  if (capacity <= kMinThreshold) throw std::invalid_argument("compute_threshold: capacity must exceed the minimum threshold");
  double raw = 0;
  if (!plan.paths.empty()) {
    const double gap_s = (plan.max_delay_ms() - plan.min_delay_ms()) / 1000.0;
    raw = std::ceil(gap_s * plan.aggregate_rate_bps() / (8.0 * mss));
  }
  const double hi = static_cast<double>(capacity - 1);
  return static_cast<std::size_t>(std::clamp(raw, static_cast<double>(kMinThreshold), hi));
}

ReseqSizing size_buffer(const MultipathPlan& plan, std::uint32_t mss) {
  // Provisional T from a capacity that cannot bind, then S = 2T capped.
  const std::size_t unbounded = compute_threshold(plan, mss, kMaxBufferPackets * 1024);
  ReseqSizing s;
  s.capacity = std::min(2 * unbounded, kMaxBufferPackets);
  s.threshold = compute_threshold(plan, mss, s.capacity);
  return s;
}

}  // namespace mpsdn
