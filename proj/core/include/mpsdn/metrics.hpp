#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpsdn/controller.hpp"
#include "mpsdn/resequencer.hpp"

namespace mpsdn {

/// Version of the metrics.csv / paths.csv column layout.
constexpr int kMetricsSchemaVersion = 1;

/// One flow over one measurement interval.
struct MetricsRecord {
  double t_start_s = 0;
  double t_end_s = 0;
  std::string flow;
  double goodput_bps = 0;
  std::vector<std::pair<std::string, double>> path_throughput_bps;  // by path label
  double cwnd_bytes = 0;
  double cwnd_min_bytes = 0;
  std::size_t reseq_occupancy = 0;  // peak within the interval
  std::uint64_t drops = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct PlanEvent {
  double time_s = 0;
  std::string demand;  // "SRC->DST"
  MultipathPlan plan;
  bool degraded = false;
  std::vector<std::string> dropped;
  std::vector<std::string> readmitted;
  std::optional<ReseqSizing> reseq;
};

struct FlowSummary {
  std::string name;
  std::string type;
  std::string demand;
  double start_s = 0;
  double stop_s = 0;
  std::uint64_t bytes_delivered = 0;
  double goodput_bps = 0;  // bytes_delivered over [start_s, stop_s]
  std::uint64_t retransmissions = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t drops = 0;
};

struct LinkSummary {
  std::string label;
  std::uint64_t packets_in = 0;
  std::uint64_t delivered = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t random_drops = 0;
};

/// Jain's fairness index (sum x)^2 / (n * sum x^2).
/// Throws std::invalid_argument on empty input, negative values or all zeros.
double jain_index(std::span<const double> throughputs);

void write_metrics_csv(std::ostream& os, std::span<const MetricsRecord> records);
void write_path_metrics_csv(std::ostream& os, std::span<const MetricsRecord> records);

/// Goodput series of one flow, one value per interval, in time order.
std::vector<double> goodput_series(std::span<const MetricsRecord> records, const std::string& flow);

/// Per-interval Jain index across the named flows (intervals where every one is measured).
std::vector<double> jain_per_interval(std::span<const MetricsRecord> records, std::span<const std::string> flows);

}  // namespace mpsdn
