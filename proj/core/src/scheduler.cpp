#include "mpsdn/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mpsdn {

WrrState::WrrState(std::vector<double> weights, std::size_t round_size) : requested_round_size_(round_size) {
  if (round_size == 0) throw std::invalid_argument("WrrState: round size must be positive");
  reconfigure(std::move(weights));
}

void WrrState::reconfigure(const MultipathPlan& plan) { reconfigure(plan.weights); }

void WrrState::reconfigure(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("WrrState: no paths");
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw std::invalid_argument("WrrState: negative weight");
    total += w;
  }
  if (!(total > 0)) throw std::invalid_argument("WrrState: all weights zero");
  double min_positive = 1.0;
  for (double& w : weights) {
    w /= total;
    if (w > 0) min_positive = std::min(min_positive, w);
  }
  weights_ = std::move(weights);

  // Two packets of expected share per round keeps every quota >= 1 under the credit scheme.
  round_size_ = std::max(requested_round_size_, weights_.size());
  if (min_positive * static_cast<double>(round_size_) < 2.0 && weights_.size() > 1)
    round_size_ = std::min(kMaxRoundSize, std::max(round_size_, static_cast<std::size_t>(std::ceil(2.0 / min_positive))));

  credit_.assign(weights_.size(), 0.0);
  round_ = 0;
  start_round();
}

void WrrState::start_round() {
  const double r = static_cast<double>(round_size_);
  std::vector<double> frac(weights_.size());
  quota_.assign(weights_.size(), 0);
  std::size_t issued = 0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    credit_[j] += weights_[j] * r;
    const double whole = std::max(0.0, std::floor(credit_[j]));
    quota_[j] = static_cast<std::uint32_t>(whole);
    frac[j] = credit_[j] - whole;
    issued += quota_[j];
  }
  std::vector<std::size_t> order(weights_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  std::erase_if(order, [&](std::size_t j) { return weights_[j] <= 0; });
  for (std::size_t k = 0; issued < round_size_; ++k, ++issued) ++quota_[order[k % order.size()]];
  for (std::size_t j = 0; j < weights_.size(); ++j) credit_[j] -= quota_[j];

  current_ = 0;
  while (current_ < quota_.size() && quota_[current_] == 0) ++current_;
}

std::size_t WrrState::next_path() {
  if (current_ >= quota_.size()) {
    ++round_;
    start_round();
  }
  const std::size_t path = current_;
  if (--quota_[current_] == 0) {
    ++current_;
    while (current_ < quota_.size() && quota_[current_] == 0) ++current_;
  }
  return path;
}

}  // namespace mpsdn
