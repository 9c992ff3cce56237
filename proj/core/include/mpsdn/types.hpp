#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace mpsdn {

/// Switch / router label, e.g. "BEJ". Ordered lexicographically; that order is
/// what every deterministic tie-break in the library uses.
class NodeId {
 public:
  NodeId() = default;
  explicit NodeId(std::string label) : label_(std::move(label)) {}

  const std::string& str() const noexcept { return label_; }
  bool empty() const noexcept { return label_.empty(); }

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  friend bool operator==(const NodeId&, const NodeId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const NodeId& id) {
    return os << id.label_;
  }

 private:
  std::string label_;
};

// Simulated time is kept in integer microsecond ticks; interfaces speak ms.
using SimTime = std::int64_t;

constexpr SimTime kTicksPerMs = 1000;
constexpr SimTime kTicksPerSecond = 1000 * kTicksPerMs;

constexpr SimTime ms_to_ticks(double ms) {
  return static_cast<SimTime>(ms * static_cast<double>(kTicksPerMs) + (ms >= 0 ? 0.5 : -0.5));
}
constexpr double ticks_to_ms(SimTime t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerMs);
}
constexpr double ticks_to_seconds(SimTime t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerSecond);
}

/// Malformed scenario text. Carries the 1-based line of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Well-formed input that violates a model invariant (dangling link, bad capacity, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No source-to-sink route with positive capacity.
class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpsdn

template <>
struct std::hash<mpsdn::NodeId> {
  std::size_t operator()(const mpsdn::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
