#include "mpsdn/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "mpsdn/controller.hpp"
#include "mpsdn/resequencer.hpp"
#include "mpsdn/scheduler.hpp"
#include "mpsdn/tcp.hpp"

namespace mpsdn {

void EventQueue::schedule(SimTime at, Action action) {
  if (at < now_) throw std::logic_error("EventQueue: event scheduled in the past");
  heap_.push_back(Event{at, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

std::uint64_t EventQueue::run_until(SimTime end) {
  std::uint64_t n = 0;
  while (!heap_.empty() && heap_.front().time <= end) {
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event ev = std::move(heap_.back());
    heap_.pop_back();
    now_ = ev.time;
    ev.action();
    ++n;
  }
  now_ = std::max(now_, end);
  return n;
}

SimTime LinkChannel::serialization_ticks(std::uint32_t wire_bytes) const {
  const double seconds = 8.0 * wire_bytes / link_.capacity_bps;
  return std::max<SimTime>(1, std::llround(seconds * static_cast<double>(kTicksPerSecond)));
}

std::size_t LinkChannel::backlog(SimTime now) {
  while (!departures_.empty() && departures_.front() <= now) departures_.pop_front();
  return departures_.size();
}

LinkChannel::Transmission LinkChannel::link_transmit(std::uint32_t wire_bytes, SimTime now, double loss_draw) {
  ++packets_in_;
  Transmission t;
  if (backlog(now) >= static_cast<std::size_t>(link_.queue_limit)) {
    ++queue_drops_;
    t.outcome = Outcome::QueueDrop;
    t.start = t.departure = t.arrival = now;
    return t;
  }
  t.start = std::max(now, busy_until_);
  t.departure = t.start + serialization_ticks(wire_bytes);
  t.arrival = t.departure + ms_to_ticks(link_.latency_ms);
  busy_until_ = t.departure;
  departures_.push_back(t.departure);
  if (loss_draw < link_.loss_rate) {
    ++random_drops_;
    t.outcome = Outcome::RandomDrop;
  } else {
    ++delivered_;
  }
  return t;
}

const FlowSummary* RunResult::flow(const std::string& name) const {
  for (const auto& f : flows)
    if (f.name == name) return &f;
  return nullptr;
}

namespace {

constexpr std::uint32_t kAckWireBytes = kTcpIpHeaderBytes;
constexpr std::uint32_t kSynWireBytes = kTcpIpHeaderBytes + 8;
constexpr std::uint32_t kUdpWireBytes = 1500;
constexpr std::uint32_t kUdpPayloadBytes = 1472;

enum class Kind { Data, Ack, Udp };

struct WirePacket {
  Kind kind = Kind::Data;
  std::size_t flow = 0;
  std::uint32_t wire_bytes = 0;
  std::size_t route = 0;  // index into the route registry
  std::size_t hop = 0;
  Packet hdr;       // Data: seq/size/syn; path_taken holds the plan path index
  AckInfo ack;      // Ack only
};

struct Route {
  std::string label;
  std::vector<LinkIndex> links;
};

struct DemandState {
  Demand demand;
  std::string label;
  std::unique_ptr<PathMonitor> monitor;  // null when pinned
  MultipathPlan plan;
  std::vector<std::size_t> plan_routes;  // route id per plan path
  std::size_t ack_route = 0;
  std::vector<PortCounter> own;  // per link, this demand's traffic only
  std::vector<std::size_t> flows;
  bool degraded = false;
};

struct IntervalCounters {
  std::uint64_t goodput_bytes = 0;
  std::map<std::string, std::uint64_t> path_bytes;
  double cwnd_min = 0;
  std::size_t reseq_peak = 0;
  std::uint64_t drops = 0;
};

struct FlowState {
  const FlowSpec* spec = nullptr;
  std::size_t index = 0;
  std::size_t demand = 0;      // TCP only
  std::size_t udp_route = 0;   // UDP only
  std::uint32_t isn = 0;
  std::unique_ptr<TcpSender> sender;
  TcpReceiver receiver;
  std::unique_ptr<WrrState> wrr;
  std::optional<FlowResequencer> reseq;
  std::optional<SimTime> timer_event_at;
  bool stopped = false;
  IntervalCounters interval;
  std::uint64_t bytes_delivered = 0;
  std::uint64_t drops = 0;
};

std::string fmt_ms(SimTime t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", ticks_to_ms(t));
  return buf;
}

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts)
      : cfg_(cfg), opts_(opts), rng_(seed) {
    result_.scenario = cfg.name;
    result_.seed = seed;
    result_.duration_s = cfg.duration_s;
    const auto& topo = cfg_.topology;
    for (const auto& l : topo.links()) {
      channels_.emplace_back(l);
      totals_.emplace_back(cfg_.controller.poll_interval_ms);
    }
    setup_flows();
  }

  RunResult execute() {
    const SimTime end = static_cast<SimTime>(std::llround(cfg_.duration_s * kTicksPerSecond));
    const SimTime interval = ms_to_ticks(cfg_.interval_ms);
    const SimTime poll = ms_to_ticks(cfg_.controller.poll_interval_ms);

    for (auto& f : flows_) {
      const SimTime start = static_cast<SimTime>(std::llround(f.spec->start_s * kTicksPerSecond));
      const SimTime stop = static_cast<SimTime>(std::llround(cfg_.flow_stop_s(*f.spec) * kTicksPerSecond));
      if (start < end) events_.schedule(start, [this, &f] { start_flow(f); });
      if (stop < end) events_.schedule(stop, [this, &f] { stop_flow(f); });
    }
    if (!flows_.empty()) {
      for (SimTime t = interval; t < end; t += interval) events_.schedule(t, [this, t] { close_interval(t); });
      bool polled = false;
      for (auto& d : demands_) polled = polled || d.monitor != nullptr;
      if (polled)
        for (SimTime t = poll; t < end; t += poll) events_.schedule(t, [this] { poll_controller(); });
    }
    result_.events_executed = events_.run_until(end);
    if (!flows_.empty()) {
      const SimTime last = (end / interval) * interval;
      if (last < end || result_.metrics.empty() || result_.metrics.back().t_end_s < ticks_to_seconds(end))
        close_interval(end);
    }
    summarize();
    return std::move(result_);
  }

 private:
  std::size_t register_route(const std::string& label, std::vector<LinkIndex> links) {
    auto it = route_ids_.find(label);
    if (it != route_ids_.end()) return it->second;
    routes_.push_back(Route{label, std::move(links)});
    route_ids_.emplace(label, routes_.size() - 1);
    return routes_.size() - 1;
  }

  std::size_t shortest_route(const NodeId& src, const NodeId& dst) {
    auto paths = max_flow_paths(cfg_.topology, src, dst, 1);
    return register_route(paths.front().label(), paths.front().links);
  }

  void install_plan(DemandState& d, const MultipathPlan& plan) {
    d.plan = plan;
    d.plan_routes.clear();
    for (const auto& p : plan.paths) d.plan_routes.push_back(register_route(p.label(), p.links));
  }

  void setup_flows() {
    const auto& topo = cfg_.topology;
    for (std::size_t i = 0; i < cfg_.flows.size(); ++i) {
      const FlowSpec& spec = cfg_.flows[i];
      FlowState f;
      f.spec = &spec;
      f.index = i;
      if (spec.type == FlowType::Udp) {
        f.udp_route = shortest_route(spec.src, spec.dst);
        flows_.push_back(std::move(f));
        continue;
      }
      Demand dem{spec.src, spec.dst};
      auto it = std::find_if(demands_.begin(), demands_.end(), [&](const DemandState& d) { return d.demand == dem; });
      if (it == demands_.end()) {
        DemandState d;
        d.demand = dem;
        d.label = dem.src.str() + "->" + dem.dst.str();
        if (opts_.pinned_path) {
          auto candidates = max_flow_paths(topo, dem.src, dem.dst, cfg_.controller.max_paths);
          if (*opts_.pinned_path >= candidates.size())
            throw ValidationError("pinned path " + std::to_string(*opts_.pinned_path) + " does not exist for " + d.label);
          install_plan(d, build_plan({candidates[*opts_.pinned_path]}, cfg_.controller));
        } else {
          d.monitor = std::make_unique<PathMonitor>(topo, dem, cfg_.controller);
          install_plan(d, d.monitor->plan());
        }
        d.ack_route = shortest_route(dem.dst, dem.src);
        for (std::size_t l = 0; l < topo.links().size(); ++l) d.own.emplace_back(cfg_.controller.poll_interval_ms);
        demands_.push_back(std::move(d));
        it = std::prev(demands_.end());
        record_plan_event(0, *it, {}, {}, false);
      }
      f.demand = static_cast<std::size_t>(it - demands_.begin());
      it->flows.push_back(i);
      f.sender = std::make_unique<TcpSender>(cfg_.tcp);
      f.wrr = std::make_unique<WrrState>(it->plan.weights, cfg_.wrr_round_size);
      if (it->plan.reorder_buffer_enabled && it->plan.paths.size() > 1)
        f.reseq.emplace(size_buffer(it->plan, cfg_.tcp.mss), cfg_.lrf);
      flows_.push_back(std::move(f));
    }
  }

  void record_plan_event(SimTime now, const DemandState& d, std::vector<std::string> dropped,
                         std::vector<std::string> readmitted, bool degraded) {
    PlanEvent ev;
    ev.time_s = ticks_to_seconds(now);
    ev.demand = d.label;
    ev.plan = d.plan;
    ev.degraded = degraded;
    ev.dropped = std::move(dropped);
    ev.readmitted = std::move(readmitted);
    if (d.plan.reorder_buffer_enabled && d.plan.paths.size() > 1) ev.reseq = size_buffer(d.plan, cfg_.tcp.mss);
    result_.plan_events.push_back(std::move(ev));
  }

  // ---- transmission -------------------------------------------------------

  void send_on_link(WirePacket pkt, SimTime now) {
    const LinkIndex li = routes_[pkt.route].links[pkt.hop];
    auto& ch = channels_[li];
    const double draw = ch.link().loss_rate > 0 ? rng_.uniform() : 1.0;
    const auto tx = ch.link_transmit(pkt.wire_bytes, now, draw);
    if (tx.outcome == LinkChannel::Outcome::QueueDrop) {
      on_drop(pkt, now, "drop_queue");
      return;
    }
    events_.schedule(tx.departure, [this, li, bytes = pkt.wire_bytes, kind = pkt.kind, flow = pkt.flow] {
      const double t_ms = ticks_to_ms(events_.now());
      totals_[li].record(bytes, t_ms);
      if (kind != Kind::Udp) demands_[flows_[flow].demand].own[li].record(bytes, t_ms);
    });
    if (tx.outcome == LinkChannel::Outcome::RandomDrop) {
      events_.schedule(tx.departure, [this, pkt] { on_drop(pkt, events_.now(), "drop_loss"); });
      return;
    }
    events_.schedule(tx.arrival, [this, pkt]() mutable { on_hop_arrival(std::move(pkt)); });
  }

  void on_drop(const WirePacket& pkt, SimTime now, const char* what) {
    auto& f = flows_[pkt.flow];
    ++f.drops;
    ++f.interval.drops;
    if (opts_.trace && pkt.kind == Kind::Data) trace_line(now, f, pkt.hdr.seq, pkt.hdr.path_taken, what);
  }

  void on_hop_arrival(WirePacket pkt) {
    ++pkt.hop;
    const SimTime now = events_.now();
    if (pkt.hop < routes_[pkt.route].links.size()) {
      send_on_link(std::move(pkt), now);
      return;
    }
    auto& f = flows_[pkt.flow];
    switch (pkt.kind) {
      case Kind::Udp:
        f.interval.goodput_bytes += kUdpPayloadBytes;
        f.interval.path_bytes[routes_[pkt.route].label] += kUdpPayloadBytes;
        f.bytes_delivered += kUdpPayloadBytes;
        break;
      case Kind::Ack:
        handle_sender_output(f, f.sender->tcp_on_ack(pkt.ack, now), now);
        break;
      case Kind::Data:
        on_data_at_edge(f, pkt, now);
        break;
    }
  }

  void trace_line(SimTime now, const FlowState& f, std::uint32_t seq, std::size_t path, const char* event) {
    result_.trace += fmt_ms(now) + ',' + f.spec->name + ',' + std::to_string(seq) + ',' + std::to_string(path) + ',' +
                     event + '\n';
  }

  // ---- TCP ------------------------------------------------------------------

  void start_flow(FlowState& f) {
    const SimTime now = events_.now();
    if (f.spec->type == FlowType::Udp) {
      udp_emit(f);
      return;
    }
    f.interval.cwnd_min = f.sender->cwnd();
    handle_sender_output(f, f.sender->tcp_on_start(now), now);
  }

  void stop_flow(FlowState& f) {
    f.stopped = true;
    if (f.sender) f.sender->stop_new_data();
  }

  void udp_emit(FlowState& f) {
    if (f.stopped) return;
    const SimTime now = events_.now();
    WirePacket pkt;
    pkt.kind = Kind::Udp;
    pkt.flow = f.index;
    pkt.wire_bytes = kUdpWireBytes;
    pkt.route = f.udp_route;
    send_on_link(std::move(pkt), now);
    const double mean_s = 8.0 * kUdpWireBytes / f.spec->rate_bps;
    const double gap_s = mean_s * (0.5 + rng_.uniform());
    const SimTime gap = std::max<SimTime>(1, std::llround(gap_s * kTicksPerSecond));
    events_.schedule(now + gap, [this, &f] { udp_emit(f); });
  }

  void handle_sender_output(FlowState& f, const std::vector<Segment>& segs, SimTime now) {
    auto& d = demands_[f.demand];
    for (const auto& seg : segs) {
      WirePacket pkt;
      pkt.kind = Kind::Data;
      pkt.flow = f.index;
      pkt.wire_bytes = seg.syn ? kSynWireBytes : seg.length + kTcpIpHeaderBytes;
      const std::size_t j = f.wrr->next_path();
      pkt.route = d.plan_routes[j];
      pkt.hdr.flow_id = static_cast<FlowId>(f.index);
      pkt.hdr.seq = static_cast<std::uint32_t>(f.isn + seg.offset);
      pkt.hdr.size = seg.length;
      pkt.hdr.syn = seg.syn;
      pkt.hdr.send_time_ms = ticks_to_ms(now);
      pkt.hdr.path_taken = j;
      if (opts_.trace) trace_line(now, f, pkt.hdr.seq, j, seg.retransmission ? "send_rtx" : "send");
      send_on_link(std::move(pkt), now);
    }
    f.interval.cwnd_min = std::min(f.interval.cwnd_min, f.sender->cwnd());
    arm_timer(f);
  }

  void arm_timer(FlowState& f) {
    auto deadline = f.sender->timer_deadline();
    if (!deadline) return;
    if (f.timer_event_at && *f.timer_event_at <= *deadline) return;  // fires early and re-arms lazily
    f.timer_event_at = *deadline;
    events_.schedule(*deadline, [this, &f, at = *deadline] { on_timer(f, at); });
  }

  void on_timer(FlowState& f, SimTime at) {
    if (!f.timer_event_at || *f.timer_event_at != at) return;
    f.timer_event_at.reset();
    const SimTime now = events_.now();
    auto deadline = f.sender->timer_deadline();
    if (!deadline) return;
    if (*deadline > now) {
      arm_timer(f);
      return;
    }
    handle_sender_output(f, f.sender->tcp_on_timeout(now), now);
  }

  Segment to_segment(const FlowState& f, const Packet& p) const {
    Segment s;
    s.syn = p.syn;
    s.length = p.size;
    if (p.syn) {
      s.offset = static_cast<std::uint32_t>(p.seq - f.isn);
      return s;
    }
    const std::uint64_t ref = f.receiver.open() ? f.receiver.rcv_nxt() : 1;
    const auto ref32 = static_cast<std::uint32_t>(f.isn + ref);
    const auto delta = static_cast<std::int32_t>(p.seq - ref32);
    s.offset = static_cast<std::uint64_t>(static_cast<std::int64_t>(ref) + delta);
    return s;
  }

  void on_data_at_edge(FlowState& f, const WirePacket& pkt, SimTime now) {
    const std::string& label = routes_[pkt.route].label;
    f.interval.path_bytes[label] += pkt.hdr.size;
    if (opts_.trace) {
      trace_line(now, f, pkt.hdr.seq, pkt.hdr.path_taken, "arrive");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f,", ticks_to_seconds(now));
      result_.seq_trace += buf + f.spec->name + ',' + std::to_string(pkt.hdr.seq - f.isn) + '\n';
    }
    Packet hdr = pkt.hdr;
    hdr.arrival_time_ms = ticks_to_ms(now);
    if (!f.reseq) {
      deliver_to_receiver(f, hdr, now);
      return;
    }
    ReseqResult r = f.reseq->on_packet(hdr);
    f.interval.reseq_peak = std::max(f.interval.reseq_peak, f.reseq->occupancy());
    if (opts_.trace_reseq)
      result_.reseq_trace += fmt_ms(now) + ',' + f.spec->name + ',' + std::to_string(hdr.seq - f.isn) + ',' +
                             to_string(r.action) + ',' + std::to_string(f.reseq->occupancy()) + '\n';
    for (const auto& p : r.forwarded) deliver_to_receiver(f, p, now);
  }

  void deliver_to_receiver(FlowState& f, const Packet& p, SimTime now) {
    auto delivery = f.receiver.on_segment(to_segment(f, p));
    f.interval.goodput_bytes += delivery.newly_delivered;
    f.bytes_delivered += delivery.newly_delivered;
    WirePacket ack;
    ack.kind = Kind::Ack;
    ack.flow = f.index;
    ack.wire_bytes = kAckWireBytes;
    ack.route = demands_[f.demand].ack_route;
    ack.ack = std::move(delivery.ack);
    send_on_link(std::move(ack), now);
  }

  // ---- controller -----------------------------------------------------------

  void poll_controller() {
    const SimTime now = events_.now();
    const double t_ms = ticks_to_ms(now);
    for (auto& c : totals_) c.advance_to(t_ms);
    for (auto& d : demands_) {
      if (!d.monitor) continue;
      std::vector<PortStats> background(totals_.size());
      for (std::size_t l = 0; l < totals_.size(); ++l) {
        d.own[l].advance_to(t_ms);
        const PortStats& all = totals_[l].last_completed();
        const PortStats& own = d.own[l].last_completed();
        background[l] = all;
        background[l].bytes_sent_in_window = all.bytes_sent_in_window - std::min(all.bytes_sent_in_window, own.bytes_sent_in_window);
      }
      PollDecision decision = d.monitor->recompute_on_poll(background);
      if (!decision.changed && !decision.degraded && decision.dropped.empty() && decision.readmitted.empty()) continue;
      const bool repeat = decision.degraded && d.degraded && !decision.changed;
      d.degraded = decision.degraded;
      if (repeat) continue;
      if (decision.changed) apply_plan(d, decision.plan, now);
      record_plan_event(now, d, decision.dropped, decision.readmitted, decision.degraded);
    }
  }

  void apply_plan(DemandState& d, const MultipathPlan& plan, SimTime now) {
    install_plan(d, plan);
    const bool buffer = plan.reorder_buffer_enabled && plan.paths.size() > 1;
    for (std::size_t fi : d.flows) {
      auto& f = flows_[fi];
      f.wrr->reconfigure(plan);
      if (!buffer) {
        if (f.reseq) {
          for (const auto& p : f.reseq->flush_flow()) deliver_to_receiver(f, p, now);
          f.reseq.reset();
        }
      } else if (!f.reseq) {
        f.reseq.emplace(size_buffer(plan, cfg_.tcp.mss), cfg_.lrf);
      } else {
        f.reseq->resize(size_buffer(plan, cfg_.tcp.mss));
      }
    }
  }

  // ---- metrics --------------------------------------------------------------

  void close_interval(SimTime t) {
    const double t_end = ticks_to_seconds(t);
    const double len_s = std::min(cfg_.interval_ms / 1000.0, t_end - last_interval_end_);
    if (len_s <= 0) return;
    for (auto& f : flows_) {
      MetricsRecord r;
      r.t_start_s = last_interval_end_;
      r.t_end_s = t_end;
      r.flow = f.spec->name;
      r.goodput_bps = 8.0 * static_cast<double>(f.interval.goodput_bytes) / len_s;
      for (const auto& [label, bytes] : f.interval.path_bytes)
        r.path_throughput_bps.emplace_back(label, 8.0 * static_cast<double>(bytes) / len_s);
      if (f.sender) {
        r.cwnd_bytes = f.sender->cwnd();
        r.cwnd_min_bytes = f.sender->phase() == TcpSender::Phase::Closed ? 0 : f.interval.cwnd_min;
      }
      r.reseq_occupancy = f.interval.reseq_peak;
      r.drops = f.interval.drops;
      result_.metrics.push_back(std::move(r));
      f.interval = IntervalCounters{};
      if (f.sender) f.interval.cwnd_min = f.sender->cwnd();
      if (f.reseq) f.interval.reseq_peak = f.reseq->occupancy();
    }
    last_interval_end_ = t_end;
  }

  void summarize() {
    for (auto& f : flows_) {
      FlowSummary s;
      s.name = f.spec->name;
      s.type = f.spec->type == FlowType::Tcp ? "tcp" : "udp";
      s.demand = f.spec->src.str() + "->" + f.spec->dst.str();
      s.start_s = f.spec->start_s;
      s.stop_s = std::min(cfg_.flow_stop_s(*f.spec), cfg_.duration_s);
      s.bytes_delivered = f.bytes_delivered;
      s.goodput_bps = s.stop_s > s.start_s ? 8.0 * static_cast<double>(f.bytes_delivered) / (s.stop_s - s.start_s) : 0;
      if (f.sender) {
        s.retransmissions = f.sender->counters().retransmissions;
        s.fast_retransmits = f.sender->counters().fast_retransmits;
        s.timeouts = f.sender->counters().timeouts;
      }
      s.drops = f.drops;
      result_.flows.push_back(std::move(s));
    }
    for (const auto& ch : channels_) {
      LinkSummary s;
      s.label = ch.link().src.str() + "->" + ch.link().dst.str();
      s.packets_in = ch.packets_in();
      s.delivered = ch.delivered();
      s.queue_drops = ch.queue_drops();
      s.random_drops = ch.random_drops();
      result_.links.push_back(std::move(s));
    }
  }

  const ScenarioConfig& cfg_;
  RunOptions opts_;
  SimRandom rng_;
  EventQueue events_;
  std::vector<LinkChannel> channels_;
  std::vector<PortCounter> totals_;
  std::vector<Route> routes_;
  std::map<std::string, std::size_t> route_ids_;
  std::vector<DemandState> demands_;
  std::vector<FlowState> flows_;
  double last_interval_end_ = 0;
  RunResult result_;
};

}  // namespace

RunResult run(const ScenarioConfig& scenario, std::uint64_t seed, const RunOptions& options) {
  scenario.validate();
  Simulation sim(scenario, seed, options);
  return sim.execute();
}

}  // namespace mpsdn
