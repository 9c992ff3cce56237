#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mpsdn/metrics.hpp"
#include "mpsdn/netmodel.hpp"
#include "mpsdn/scenario.hpp"

namespace mpsdn {

/// Time-ordered event list. Events at the same tick run in insertion order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  void schedule(SimTime at, Action action);
  /// Runs events with time <= end. Returns the number executed.
  std::uint64_t run_until(SimTime end);

  SimTime now() const noexcept { return now_; }
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t pending() const noexcept { return heap_.size(); }

 private:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::vector<Event> heap_;
  std::uint64_t next_seq_ = 0;
  SimTime now_ = 0;
};

/// Seeded generator for the two stochastic elements (random loss, UDP spacing).
class SimRandom {
 public:
  explicit SimRandom(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, 1) with 53 random bits; identical across platforms.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Droptail FIFO plus serialization and propagation for one directed link.
class LinkChannel {
 public:
  enum class Outcome { Delivered, QueueDrop, RandomDrop };

  struct Transmission {
    Outcome outcome = Outcome::Delivered;
    SimTime start = 0;      // serialization begins
    SimTime departure = 0;  // last bit on the wire
    SimTime arrival = 0;    // far end; meaningless for QueueDrop
  };

  explicit LinkChannel(Link link) : link_(std::move(link)) {}

  /// Packets queued or in service at `now`.
  std::size_t backlog(SimTime now);

  /// Offers a packet of `wire_bytes` at `now`. `loss_draw` in [0,1) decides
  /// the Bernoulli(loss_rate) drop; a randomly dropped packet still occupies
  /// the link until its departure.
  Transmission link_transmit(std::uint32_t wire_bytes, SimTime now, double loss_draw);

  SimTime serialization_ticks(std::uint32_t wire_bytes) const;

  const Link& link() const noexcept { return link_; }
  std::uint64_t packets_in() const noexcept { return packets_in_; }
  std::uint64_t delivered() const noexcept { return delivered_; }
  std::uint64_t queue_drops() const noexcept { return queue_drops_; }
  std::uint64_t random_drops() const noexcept { return random_drops_; }

 private:
  Link link_;
  std::deque<SimTime> departures_;
  SimTime busy_until_ = 0;
  std::uint64_t packets_in_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t queue_drops_ = 0;
  std::uint64_t random_drops_ = 0;
};

struct RunOptions {
  bool trace = false;        // packet trace + sequence trace
  bool trace_reseq = false;  // resequencer event log
  /// Pin every multipath flow to candidate path j (no polling); used for single-path baselines.
  std::optional<std::size_t> pinned_path;
};

struct RunResult {
  std::string scenario;
  std::uint64_t seed = 0;
  double duration_s = 0;
  std::vector<MetricsRecord> metrics;
  std::vector<PlanEvent> plan_events;
  std::vector<FlowSummary> flows;
  std::vector<LinkSummary> links;
  std::uint64_t events_executed = 0;
  std::string trace;      // time_ms,flow,seq,path,event
  std::string seq_trace;  // time_s,flow,seq
  std::string reseq_trace;  // time_ms,flow,seq,action,occupancy

  const FlowSummary* flow(const std::string& name) const;
};

/// Executes one scenario to its end time. Same (scenario, seed) gives
/// bit-identical output. Throws ValidationError for an invalid scenario.
RunResult run(const ScenarioConfig& scenario, std::uint64_t seed, const RunOptions& options = {});

}  // namespace mpsdn
