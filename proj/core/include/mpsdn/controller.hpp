#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpsdn/netmodel.hpp"

namespace mpsdn {

struct CandidatePath {
  std::vector<NodeId> hops;
  std::vector<LinkIndex> links;  // links[i] joins hops[i] -> hops[i+1]
  double allocated_rate_bps = 0.0;
  double path_delay_ms = 0.0;  // sum of one-way link latencies

  std::string label() const;  // "BEJ-SHA-TOK-HAW"
  friend bool operator==(const CandidatePath&, const CandidatePath&) = default;
};

struct ControllerConfig {
  double reorder_threshold = 0.15;
  double aggregation_cutoff = 0.40;
  double poll_interval_ms = 2000.0;
  std::size_t max_paths = 2;  // 0 means unrestricted

  /// Throws ValidationError unless 0 <= reorder_threshold <= aggregation_cutoff <= 0.5.
  void validate() const;
  friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

struct MultipathPlan {
  std::vector<CandidatePath> paths;
  std::vector<double> weights;
  double mdi = 0.0;
  bool reorder_buffer_enabled = false;
  bool single_path_fallback = false;
  std::string fallback_reason;

  double aggregate_rate_bps() const;
  double min_delay_ms() const;
  double max_delay_ms() const;
  friend bool operator==(const MultipathPlan&, const MultipathPlan&) = default;
};

/// Maximum delay imbalance: d_max / (d_max + d_min) - 0.5.
/// Throws std::invalid_argument on an empty list or a non-positive delay.
double mdi(std::span<const double> delays_ms);

/// Second-path delay that yields `target_mdi` against a path of `base_ms`.
double delay_for_mdi(double base_ms, double target_mdi);

/// Max-flow path set from `src` to `dst`.
///
/// Augmenting paths are found lowest-latency first in the residual graph
/// (Dijkstra over reduced costs, so cancelling reverse edges stays valid),
/// with equal-latency ties going to the lexicographically smaller node label.
/// At most `max_paths` augmentations run (0 = until no augmenting path is
/// left); the resulting flow is decomposed into simple paths ordered by
/// latency. `capacities_bps`, if given, overrides the per-link capacity (it is
/// how residual capacity from port statistics is fed in).
///
/// Throws NoPathError when no path with positive capacity exists.
std::vector<CandidatePath> max_flow_paths(const Topology& topo, const NodeId& src, const NodeId& dst,
                                          std::size_t max_paths,
                                          std::span<const double> capacities_bps = {});

/// Gates the candidate set by MDI and derives WRR weights w_j = c_j / sum c_i.
MultipathPlan build_plan(std::vector<CandidatePath> paths, const ControllerConfig& config);

/// Outcome of one poll.
struct PollDecision {
  MultipathPlan plan;
  bool changed = false;
  bool degraded = false;  // no usable path; previous plan kept
  std::vector<std::string> dropped;      // labels dropped at this poll
  std::vector<std::string> readmitted;   // labels re-admitted at this poll
};

/// Periodic recomputation for one demand.
///
/// Residual link capacity is capacity minus the traffic that does not belong
/// to the demand itself (the demand's own forwarding would otherwise read as
/// congestion). A path of the current plan whose residual drops below 1% of
/// its nominal rate is dropped; a dropped path comes back only after its
/// residual exceeds 10% of nominal on two consecutive polls. Until then its
/// bottleneck link is withheld from the search, so no detour through it is offered.
class PathMonitor {
 public:
  static constexpr double kDropFraction = 0.01;
  static constexpr double kReadmitFraction = 0.10;
  static constexpr int kReadmitPolls = 2;

  PathMonitor(const Topology& topo, Demand demand, ControllerConfig config);

  const MultipathPlan& plan() const noexcept { return plan_; }
  const Demand& demand() const noexcept { return demand_; }
  bool degraded() const noexcept { return degraded_; }
  /// Nominal (idle-network) rate per path label.
  const std::map<std::string, double>& nominal_rates() const noexcept { return nominal_; }

  /// `background` holds one completed window per link, counting only
  /// traffic that is not this demand's.
  PollDecision recompute_on_poll(std::span<const PortStats> background);

 private:
  struct DroppedPath {
    CandidatePath path;
    LinkIndex bottleneck = 0;  // most loaded link at the time of the drop; kept closed
    int good_polls = 0;
  };

  double path_residual(const CandidatePath& p, std::span<const double> residual) const;

  const Topology* topo_;
  Demand demand_;
  ControllerConfig config_;
  MultipathPlan plan_;
  std::map<std::string, double> nominal_;
  std::map<std::string, DroppedPath> dropped_;
  bool degraded_ = false;
};

}  // namespace mpsdn
