#pragma once

// NewReno sender with SACK scoreboard recovery and time-based loss
// detection (a hole is lost once a later-sent segment has been delivered and
// a reordering window has elapsed), plus the matching cumulative-ACK receiver.
// Sequence numbers are 64-bit absolute offsets from the ISN: the SYN occupies
// offset 0 and payload byte k sits at offset 1 + k. Conversion to 32-bit wire
// sequence numbers happens at the simulator boundary.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mpsdn/types.hpp"

namespace mpsdn {

constexpr std::uint32_t kDefaultMss = 1448;
constexpr std::uint32_t kTcpIpHeaderBytes = 52;  // IPv4 + TCP with timestamps

struct TcpConfig {
  std::uint32_t mss = kDefaultMss;
  std::uint32_t initial_window_segments = 10;
  std::uint32_t dupack_threshold = 3;
  double initial_rto_ms = 1000.0;
  double min_rto_ms = 200.0;
  double max_rto_ms = 60000.0;
  /// Reordering window as a fraction of the minimum RTT. Until reordering
  /// has been observed the window closes once dupack_threshold segments are
  /// SACKed, which gives classic fast retransmit.
  double reordering_window = 0.25;
  /// Revert a recovery whose retransmissions all come back as duplicates.
  bool dsack_undo = true;

  friend bool operator==(const TcpConfig&, const TcpConfig&) = default;
};

struct SeqRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  friend bool operator==(const SeqRange&, const SeqRange&) = default;
};

struct AckInfo {
  std::uint64_t ack = 0;  // next expected offset
  std::vector<SeqRange> sack;
  bool duplicate = false;  // triggering segment was already held (D-SACK)
};

struct Segment {
  std::uint64_t offset = 0;
  std::uint32_t length = 0;  // payload bytes; 0 for the SYN
  bool syn = false;
  bool retransmission = false;
};

class TcpSender {
 public:
  enum class Phase { Closed, SynSent, Established };

  struct Counters {
    std::uint64_t segments_sent = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t fast_retransmits = 0;  // recovery episodes entered
    std::uint64_t timeouts = 0;
    std::uint64_t undos = 0;  // recoveries reverted as spurious
  };

  explicit TcpSender(TcpConfig config = {});

  /// Opens the connection: returns the SYN.
  std::vector<Segment> tcp_on_start(SimTime now);
  std::vector<Segment> tcp_on_ack(const AckInfo& ack, SimTime now);
  /// Services whichever timer is due (reordering or retransmission).
  std::vector<Segment> tcp_on_timeout(SimTime now);
  /// Application stops producing new data; outstanding data is still repaired.
  void stop_new_data() { app_open_ = false; }

  /// Earliest armed timer, if any.
  std::optional<SimTime> timer_deadline() const;
  std::optional<SimTime> rto_deadline() const { return rto_deadline_; }

  Phase phase() const noexcept { return phase_; }
  double cwnd() const noexcept { return cwnd_; }
  double ssthresh() const noexcept { return ssthresh_; }
  double srtt_ms() const noexcept { return srtt_ms_; }
  double rto_ms() const noexcept { return rto_ms_; }
  std::uint64_t snd_una() const noexcept { return snd_una_; }
  std::uint64_t snd_max() const noexcept { return snd_max_; }
  std::uint64_t in_flight() const noexcept { return snd_max_ - snd_una_; }
  /// Bytes believed in the network: outstanding, not SACKed, not marked lost.
  std::uint64_t pipe() const;
  std::uint32_t dupacks() const noexcept { return dupacks_; }
  std::size_t lost_segments() const;
  bool reordering_seen() const noexcept { return reordering_seen_; }
  /// Current reordering window in ms.
  double reordering_window_ms() const;
  bool in_recovery() const noexcept { return in_recovery_; }
  const Counters& counters() const noexcept { return counters_; }
  const TcpConfig& config() const noexcept { return config_; }

 private:
  struct SegState {
    SimTime sent = 0;
    bool sacked = false;
    bool lost = false;    // marked lost and not yet retransmitted
    bool retx = false;    // retransmitted at least once
  };

  std::size_t index_of(std::uint64_t offset) const { return (offset - snd_una_) / config_.mss; }
  std::uint64_t offset_of(std::size_t k) const { return snd_una_ + k * config_.mss; }
  void on_delivered(std::size_t k, SimTime now);
  void detect_loss(SimTime now);
  void maybe_enter_recovery(std::vector<Segment>& out, SimTime now);
  Segment transmit(std::size_t k, SimTime now);
  void send_available(std::vector<Segment>& out, SimTime now);
  void sample_rtt(double rtt_ms);
  void arm_timer(SimTime now);

  TcpConfig config_;
  Phase phase_ = Phase::Closed;
  bool app_open_ = true;

  std::uint64_t snd_una_ = 0;
  std::uint64_t snd_max_ = 0;
  std::deque<SegState> segs_;  // segs_[k] covers offset snd_una_ + k * mss
  std::size_t sacked_count_ = 0;
  double cwnd_;
  double ssthresh_;
  std::uint32_t dupacks_ = 0;
  bool in_recovery_ = false;
  std::optional<std::uint64_t> recover_;

  // Most recently sent segment known delivered, and its RTT.
  bool rack_valid_ = false;
  SimTime rack_sent_ = 0;
  std::uint64_t rack_end_ = 0;
  SimTime rack_rtt_ = 0;
  std::optional<SimTime> min_rtt_;
  std::uint64_t fack_ = 0;  // highest delivered byte
  bool reordering_seen_ = false;
  std::optional<SimTime> reo_deadline_;

  double srtt_ms_ = 0;
  double rttvar_ms_ = 0;
  double rto_ms_;
  bool have_rtt_ = false;
  int backoff_ = 0;
  std::optional<std::pair<std::uint64_t, SimTime>> timing_;  // (segment end, send time)
  std::optional<SimTime> rto_deadline_;

  // Congestion state before the last fast recovery, restored if every
  // retransmission it made is reported as a duplicate.
  struct Undo {
    double cwnd = 0;
    double ssthresh = 0;
    std::uint32_t retrans_left = 0;
  };
  std::optional<Undo> undo_;

  Counters counters_;
};

/// Receiver side: reassembles, tracks in-order delivery, produces ACKs.
class TcpReceiver {
 public:
  struct Delivery {
    AckInfo ack;
    std::uint64_t newly_delivered = 0;  // in-order payload bytes released to the application
  };

  Delivery on_segment(const Segment& seg);

  bool open() const noexcept { return open_; }
  std::uint64_t rcv_nxt() const noexcept { return rcv_nxt_; }
  std::uint64_t delivered_bytes() const noexcept { return delivered_; }
  std::size_t out_of_order_ranges() const noexcept { return ooo_.size(); }

 private:
  bool open_ = false;
  std::uint64_t rcv_nxt_ = 0;
  std::uint64_t delivered_ = 0;
  std::map<std::uint64_t, std::uint64_t> ooo_;  // begin -> end
};

}  // namespace mpsdn
