#include "mpsdn/tcp.hpp"

#include <algorithm>
#include <cmath>

namespace mpsdn {

TcpSender::TcpSender(TcpConfig config)
    : config_(config),
      cwnd_(static_cast<double>(config.initial_window_segments) * config.mss),
      ssthresh_(1e18),
      rto_ms_(config.initial_rto_ms) {}

std::vector<Segment> TcpSender::tcp_on_start(SimTime now) {
  phase_ = Phase::SynSent;
  snd_una_ = 0;
  snd_max_ = 1;
  timing_ = std::make_pair(std::uint64_t{1}, now);
  ++counters_.segments_sent;
  arm_timer(now);
  return {Segment{0, 0, true, false}};
}

std::optional<SimTime> TcpSender::timer_deadline() const {
  if (!reo_deadline_) return rto_deadline_;
  if (!rto_deadline_) return reo_deadline_;
  return std::min(*reo_deadline_, *rto_deadline_);
}

void TcpSender::arm_timer(SimTime now) { rto_deadline_ = now + ms_to_ticks(rto_ms_); }

void TcpSender::sample_rtt(double rtt_ms) {
  if (!have_rtt_) {
    srtt_ms_ = rtt_ms;
    rttvar_ms_ = rtt_ms / 2;
    have_rtt_ = true;
  } else {
    rttvar_ms_ = 0.75 * rttvar_ms_ + 0.25 * std::abs(srtt_ms_ - rtt_ms);
    srtt_ms_ = 0.875 * srtt_ms_ + 0.125 * rtt_ms;
  }
  rto_ms_ = std::clamp(srtt_ms_ + std::max(1.0, 4 * rttvar_ms_), config_.min_rto_ms, config_.max_rto_ms);
}

std::uint64_t TcpSender::pipe() const {
  std::uint64_t n = 0;
  for (const auto& s : segs_)
    if (!s.sacked && !s.lost) ++n;
  return n * config_.mss;
}

std::size_t TcpSender::lost_segments() const {
  return static_cast<std::size_t>(std::count_if(segs_.begin(), segs_.end(), [](const SegState& s) { return s.lost; }));
}

double TcpSender::reordering_window_ms() const {
  if (!min_rtt_) return 0;
  if (!reordering_seen_ && (in_recovery_ || sacked_count_ >= config_.dupack_threshold)) return 0;
  double w = config_.reordering_window * ticks_to_ms(*min_rtt_);
  if (have_rtt_) w = std::min(w, srtt_ms_);
  return w;
}

void TcpSender::on_delivered(std::size_t k, SimTime now) {
  const SegState& s = segs_[k];
  const std::uint64_t end = offset_of(k) + config_.mss;
  if (!s.retx && end < fack_) reordering_seen_ = true;
  fack_ = std::max(fack_, end);
  const SimTime rtt = now - s.sent;
  // A retransmitted segment acknowledged faster than any RTT seen was
  // delivered by its original copy; its send time says nothing.
  if (s.retx && min_rtt_ && rtt < *min_rtt_) return;
  if (!s.retx) min_rtt_ = min_rtt_ ? std::min(*min_rtt_, rtt) : rtt;
  if (!rack_valid_ || s.sent > rack_sent_ || (s.sent == rack_sent_ && end > rack_end_)) {
    rack_valid_ = true;
    rack_sent_ = s.sent;
    rack_end_ = end;
    rack_rtt_ = rtt;
  }
}

void TcpSender::detect_loss(SimTime now) {
  reo_deadline_.reset();
  if (!rack_valid_) return;
  const SimTime wnd = ms_to_ticks(reordering_window_ms());
  for (std::size_t k = 0; k < segs_.size(); ++k) {
    SegState& s = segs_[k];
    if (s.sacked || s.lost) continue;
    const std::uint64_t end = offset_of(k) + config_.mss;
    if (s.sent > rack_sent_ || (s.sent == rack_sent_ && end >= rack_end_)) continue;
    const SimTime due = s.sent + rack_rtt_ + wnd;
    if (due <= now)
      s.lost = true;
    else if (!reo_deadline_ || due < *reo_deadline_)
      reo_deadline_ = due;
  }
}

void TcpSender::maybe_enter_recovery(std::vector<Segment>& out, SimTime now) {
  if (in_recovery_) return;
  auto it = std::find_if(segs_.begin(), segs_.end(), [](const SegState& s) { return s.lost; });
  if (it == segs_.end()) return;
  // Losses in data sent before the last timeout are repaired without another reduction.
  if (recover_ && offset_of(static_cast<std::size_t>(it - segs_.begin())) < *recover_) return;
  undo_ = Undo{cwnd_, ssthresh_, 0};
  ssthresh_ = std::max(static_cast<double>(snd_max_ - snd_una_) / 2, 2.0 * config_.mss);
  cwnd_ = ssthresh_;
  recover_ = snd_max_;
  in_recovery_ = true;
  ++counters_.fast_retransmits;
  // The first hole goes out at once, whatever the pipe says.
  out.push_back(transmit(static_cast<std::size_t>(it - segs_.begin()), now));
}

Segment TcpSender::transmit(std::size_t k, SimTime now) {
  const std::uint64_t offset = offset_of(k);
  Segment seg{offset, config_.mss, false, k < segs_.size()};
  ++counters_.segments_sent;
  if (seg.retransmission) {
    SegState& s = segs_[k];
    s.lost = false;
    s.retx = true;
    s.sent = now;
    ++counters_.retransmissions;
    if (undo_) ++undo_->retrans_left;
    if (timing_ && offset < timing_->first) timing_.reset();  // Karn
  } else {
    segs_.push_back(SegState{now, false, false, false});
    snd_max_ = offset + seg.length;
    if (!timing_) timing_ = std::make_pair(snd_max_, now);
  }
  if (!rto_deadline_) arm_timer(now);
  return seg;
}

void TcpSender::send_available(std::vector<Segment>& out, SimTime now) {
  const std::uint64_t mss = config_.mss;
  std::uint64_t in_net = pipe();
  std::size_t k = 0;
  while (static_cast<double>(in_net + mss) <= cwnd_) {
    while (k < segs_.size() && !segs_[k].lost) ++k;
    if (k == segs_.size() && !app_open_) break;
    out.push_back(transmit(k, now));
    ++k;
    in_net += mss;
  }
}

std::vector<Segment> TcpSender::tcp_on_ack(const AckInfo& info, SimTime now) {
  std::vector<Segment> out;
  const double mss = config_.mss;

  if (phase_ == Phase::SynSent) {
    if (info.ack < 1) return out;
    phase_ = Phase::Established;
    snd_una_ = 1;
    fack_ = 1;
    if (timing_ && backoff_ == 0) sample_rtt(ticks_to_ms(now - timing_->second));
    timing_.reset();
    backoff_ = 0;
    rto_deadline_.reset();
    send_available(out, now);
    return out;
  }
  if (phase_ != Phase::Established) return out;

  const std::uint64_t ack = std::min(info.ack, snd_max_);
  const std::size_t acked_segs = ack > snd_una_ ? index_of(ack) : 0;
  for (std::size_t k = 0; k < acked_segs; ++k)
    if (!segs_[k].sacked) on_delivered(k, now);
  for (const auto& b : info.sack) {
    const std::uint64_t lo = std::max(b.begin, ack);
    if (b.end <= lo) continue;
    std::size_t k = (lo - snd_una_ + config_.mss - 1) / config_.mss;
    for (; k < segs_.size() && offset_of(k) + config_.mss <= b.end; ++k) {
      if (segs_[k].sacked) continue;
      on_delivered(k, now);
      segs_[k].sacked = true;
      segs_[k].lost = false;
      ++sacked_count_;
    }
  }

  if (info.duplicate) {
    reordering_seen_ = true;
    if (undo_ && undo_->retrans_left > 0) --undo_->retrans_left;
  }
  // Every retransmission of the episode proved unnecessary, or none was sent
  // before the marked holes filled in: the reduction was spurious.
  if (config_.dsack_undo && undo_ && undo_->retrans_left == 0 && lost_segments() == 0 &&
      (in_recovery_ || info.duplicate)) {
    cwnd_ = std::max(cwnd_, undo_->cwnd);
    ssthresh_ = std::max(ssthresh_, undo_->ssthresh);
    undo_.reset();
    in_recovery_ = false;
    ++counters_.undos;
  }

  if (ack > snd_una_) {
    const auto acked = static_cast<double>(ack - snd_una_);
    for (std::size_t k = 0; k < acked_segs; ++k) {
      if (segs_.front().sacked) --sacked_count_;
      segs_.pop_front();
    }
    snd_una_ = ack;
    if (timing_ && ack >= timing_->first) {
      sample_rtt(ticks_to_ms(now - timing_->second));
      timing_.reset();
    } else if (backoff_ > 0 && have_rtt_) {
      rto_ms_ = std::clamp(srtt_ms_ + std::max(1.0, 4 * rttvar_ms_), config_.min_rto_ms, config_.max_rto_ms);
    }
    backoff_ = 0;
    dupacks_ = 0;

    if (in_recovery_) {
      if (snd_una_ >= *recover_) {
        in_recovery_ = false;
        cwnd_ = ssthresh_;
      }
    } else if (cwnd_ < ssthresh_) {
      cwnd_ += std::min(acked, mss);
    } else {
      cwnd_ += mss * mss / cwnd_;
    }
    if (snd_una_ < snd_max_)
      arm_timer(now);
    else
      rto_deadline_.reset();
  } else if (ack == snd_una_ && snd_max_ > snd_una_ && !info.duplicate) {
    ++dupacks_;
  }

  detect_loss(now);
  maybe_enter_recovery(out, now);
  send_available(out, now);
  return out;
}

std::vector<Segment> TcpSender::tcp_on_timeout(SimTime now) {
  std::vector<Segment> out;
  if (reo_deadline_ && *reo_deadline_ <= now && (!rto_deadline_ || *reo_deadline_ < *rto_deadline_)) {
    detect_loss(now);
    maybe_enter_recovery(out, now);
    send_available(out, now);
    return out;
  }
  if (!rto_deadline_ || now < *rto_deadline_) return out;
  rto_deadline_.reset();
  ++counters_.timeouts;

  if (phase_ == Phase::SynSent) {
    rto_ms_ = std::min(rto_ms_ * 2, config_.max_rto_ms);
    ++backoff_;
    timing_.reset();
    ++counters_.segments_sent;
    ++counters_.retransmissions;
    arm_timer(now);
    out.push_back(Segment{0, 0, true, true});
    return out;
  }
  if (snd_una_ >= snd_max_) return out;

  // Repeated expiry for the same data keeps ssthresh where the first one left it.
  if (backoff_ == 0) ssthresh_ = std::max(static_cast<double>(snd_max_ - snd_una_) / 2, 2.0 * config_.mss);
  cwnd_ = config_.mss;
  for (auto& s : segs_)
    if (!s.sacked) s.lost = true;
  undo_.reset();
  reo_deadline_.reset();
  in_recovery_ = false;
  dupacks_ = 0;
  recover_ = snd_max_;
  timing_.reset();
  ++backoff_;
  rto_ms_ = std::min(rto_ms_ * 2, config_.max_rto_ms);
  arm_timer(now);
  send_available(out, now);
  return out;
}

TcpReceiver::Delivery TcpReceiver::on_segment(const Segment& seg) {
  Delivery d;
  if (seg.syn) {
    if (!open_) {
      open_ = true;
      rcv_nxt_ = 1;
    }
    d.ack.ack = rcv_nxt_;
    return d;
  }
  if (!open_) {
    open_ = true;
    rcv_nxt_ = 1;
  }
  const std::uint64_t b = seg.offset;
  const std::uint64_t e = seg.offset + seg.length;
  const std::uint64_t before = rcv_nxt_;
  if (e <= rcv_nxt_) {
    d.ack.duplicate = true;
  } else {
    auto it = ooo_.upper_bound(b);
    if (it != ooo_.begin() && std::prev(it)->second >= e) d.ack.duplicate = true;
  }
  std::optional<SeqRange> latest;

  if (e > rcv_nxt_) {
    if (b <= rcv_nxt_) {
      rcv_nxt_ = e;
    } else {
      std::uint64_t nb = b;
      std::uint64_t ne = e;
      auto it = ooo_.upper_bound(nb);
      if (it != ooo_.begin()) {
        auto prev = std::prev(it);
        if (prev->second >= nb) {
          nb = prev->first;
          ne = std::max(ne, prev->second);
          it = ooo_.erase(prev);
        }
      }
      while (it != ooo_.end() && it->first <= ne) {
        ne = std::max(ne, it->second);
        it = ooo_.erase(it);
      }
      ooo_.emplace(nb, ne);
      latest = SeqRange{nb, ne};
    }
    while (!ooo_.empty() && ooo_.begin()->first <= rcv_nxt_) {
      rcv_nxt_ = std::max(rcv_nxt_, ooo_.begin()->second);
      ooo_.erase(ooo_.begin());
    }
    if (latest && latest->begin <= rcv_nxt_) latest.reset();
  }
  d.newly_delivered = rcv_nxt_ - before;
  delivered_ += d.newly_delivered;
  d.ack.ack = rcv_nxt_;

  // Up to three SACK blocks: the one holding this segment first, then the highest others.
  if (latest) d.ack.sack.push_back(*latest);
  for (auto it = ooo_.rbegin(); it != ooo_.rend() && d.ack.sack.size() < 3; ++it) {
    SeqRange r{it->first, it->second};
    if (!latest || !(r == *latest)) d.ack.sack.push_back(r);
  }
  return d;
}

}  // namespace mpsdn
