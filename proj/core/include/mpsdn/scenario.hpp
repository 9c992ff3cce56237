#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpsdn/controller.hpp"
#include "mpsdn/netmodel.hpp"
#include "mpsdn/scheduler.hpp"
#include "mpsdn/resequencer.hpp"
#include "mpsdn/tcp.hpp"

namespace mpsdn {

enum class FlowType { Tcp, Udp };

struct FlowSpec {
  std::string name;
  FlowType type = FlowType::Tcp;
  NodeId src;
  NodeId dst;
  double start_s = 0.0;
  std::optional<double> stop_s;  // defaults to the scenario duration
  double rate_bps = 0.0;         // UDP only

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

/// Two-path delay-imbalance sweep description (the `sweep` block).
struct SweepSpec {
  double base_latency_ms = 25.0;
  std::vector<double> capacities_mbps{10.0, 10.0};
  std::vector<double> mdi_points;
  double flow_seconds = 15.0;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  Topology topology;
  std::vector<FlowSpec> flows;
  ControllerConfig controller;
  std::size_t wrr_round_size = kDefaultWrrRoundSize;
  std::uint32_t lrf = kDefaultLossRecoveryFactor;
  TcpConfig tcp;
  double interval_ms = 1000.0;
  double duration_s = 30.0;
  std::uint64_t seed = 1;
  std::optional<SweepSpec> sweep;

  double flow_stop_s(const FlowSpec& f) const { return f.stop_s.value_or(duration_s); }
  /// Throws ValidationError on any broken invariant.
  void validate() const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses a scenario file. ParseError for malformed text (with line number),
/// ValidationError for well-formed text that violates an invariant.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string write_scenario(const ScenarioConfig& cfg);

/// Two nodes SRC and DST joined by one relay per path; path j carries
/// capacities_mbps[j] on both hops and latency_ms[j] on the first.
Topology two_path_topology(std::span<const double> capacities_mbps, std::span<const double> latency_ms,
                           int queue_limit = kDefaultQueueLimit);

}  // namespace mpsdn
