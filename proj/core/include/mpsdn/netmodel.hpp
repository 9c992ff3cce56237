#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpsdn/scenario_text.hpp"
#include "mpsdn/types.hpp"

namespace mpsdn {

using LinkIndex = std::size_t;

constexpr double kDefaultCapacityBps = 100e6;
constexpr int kDefaultQueueLimit = 100;
constexpr double kDefaultStatsWindowMs = 2000.0;

/// One direction of a physical link.
struct Link {
  NodeId src;
  NodeId dst;
  double capacity_bps = kDefaultCapacityBps;
  double latency_ms = 0.0;  // one-way propagation
  int queue_limit = kDefaultQueueLimit;
  double loss_rate = 0.0;

  friend bool operator==(const Link&, const Link&) = default;
};

struct Demand {
  NodeId src;
  NodeId dst;
  friend auto operator<=>(const Demand&, const Demand&) = default;
};

class Topology {
 public:
  Topology() = default;

  /// Validates every invariant; throws ValidationError naming the culprit.
  Topology(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<Demand> demands = {});

  std::span<const NodeId> nodes() const noexcept { return nodes_; }
  std::span<const Link> links() const noexcept { return links_; }
  std::span<const Demand> demands() const noexcept { return demands_; }

  const Link& link(LinkIndex i) const { return links_.at(i); }
  bool has_node(const NodeId& n) const;
  std::optional<LinkIndex> find_link(const NodeId& src, const NodeId& dst) const;
  /// Outgoing links of `n`, ordered by destination label.
  std::vector<LinkIndex> out_links(const NodeId& n) const;

  bool reachable(const NodeId& src, const NodeId& dst) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::vector<NodeId> nodes_;  // sorted
  std::vector<Link> links_;
  std::vector<Demand> demands_;
};

/// Byte counter over one polling window [window_start, window_end).
struct PortStats {
  std::uint64_t bytes_sent_in_window = 0;
  double window_start_ms = 0.0;
  double window_end_ms = kDefaultStatsWindowMs;

  double window_length_ms() const { return window_end_ms - window_start_ms; }
  friend bool operator==(const PortStats&, const PortStats&) = default;
};

/// capacity minus observed utilization, clamped at zero.
double available_capacity(const Link& link, const PortStats& stats);

/// Adds a transmission. A packet at or past window_end rolls the window
/// forward (aligned to the window length) and starts the new count.
PortStats record_transmission(const PortStats& stats, std::uint64_t pkt_bytes, double now_ms);

/// Keeps the live window plus the most recently completed one, which is what
/// the controller samples at each poll.
class PortCounter {
 public:
  explicit PortCounter(double window_ms = kDefaultStatsWindowMs, double origin_ms = 0.0);

  void record(std::uint64_t bytes, double now_ms);
  /// Rolls the live window so that it contains `now_ms`.
  void advance_to(double now_ms);

  const PortStats& current() const noexcept { return current_; }
  /// The window immediately before current(); empty if nothing was recorded there.
  const PortStats& last_completed() const noexcept { return previous_; }
  std::uint64_t total_bytes() const noexcept { return total_; }

 private:
  PortStats current_;
  PortStats previous_;
  std::uint64_t total_ = 0;
};

/// Parses the `nodes`, `link` and `flow` statements of a scenario document.
Topology topology_from_document(const text::Document& doc);
Topology load_topology(std::string_view scenario_text);

/// Emits `nodes` + one `link ->` statement per directed link + demands as
/// `demand` statements; load_topology() reads it back to an equal Topology.
text::Document topology_to_document(const Topology& topo);
std::string write_topology(const Topology& topo);

}  // namespace mpsdn
