#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpsdn/controller.hpp"

namespace mpsdn {

constexpr std::size_t kDefaultWrrRoundSize = 16;
constexpr std::size_t kMaxRoundSize = 4096;

/// Per-flow weighted round-robin over the plan's paths.
///
/// Each round hands out `round_size` packets as one consecutive burst per
/// path, in path order. Quotas are drawn from a per-path credit that
/// accumulates w_j * round_size every round; the integer part is issued and
/// leftover packets go to the largest fractional credits. Every round sums to
/// round_size exactly and a path's running count never strays a full packet
/// from its weighted share. The round grows (up to kMaxRoundSize) when a
/// weight is too small to earn at least one packet every round.
class WrrState {
 public:
  explicit WrrState(std::vector<double> weights, std::size_t round_size = kDefaultWrrRoundSize);

  /// Path for the next packet; advances the schedule.
  std::size_t next_path();

  /// Installs the plan's weights and starts a fresh round.
  void reconfigure(const MultipathPlan& plan);
  void reconfigure(std::vector<double> weights);

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const std::uint32_t> burst_quota() const noexcept { return quota_; }
  std::size_t current_path() const noexcept { return current_; }
  std::size_t round_size() const noexcept { return round_size_; }
  std::uint64_t rounds_completed() const noexcept { return round_; }

 private:
  void start_round();

  std::vector<double> weights_;
  std::size_t requested_round_size_;
  std::size_t round_size_;
  std::vector<std::uint32_t> quota_;  // remaining in the current round
  std::vector<double> credit_;
  std::size_t current_ = 0;
  std::uint64_t round_ = 0;
};

}  // namespace mpsdn
