#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace msmr {

// Servers are numbered 1..n externally; index() is the 0-based slot.
struct ServerId {
  std::uint32_t value = 1;

  constexpr std::size_t index() const noexcept { return value - 1; }
  static constexpr ServerId from_index(std::size_t i) noexcept {
    return ServerId{static_cast<std::uint32_t>(i + 1)};
  }
  friend constexpr auto operator<=>(ServerId, ServerId) = default;
};

// Rounds start at 1. Round 0 is used only as "before the first round".
struct RoundIndex {
  std::uint64_t value = 1;

  friend constexpr auto operator<=>(RoundIndex, RoundIndex) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a protocol component breaks a contract it must uphold
// (a selector returning a non-argument, a monotonicity violation, ...).
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ceil(c * log2(n)), the budget form used throughout.
std::uint64_t log_budget(double c, std::size_t n);

// floor(beta * n) with a small guard against binary rounding (0.1 * 1000).
std::size_t blocking_budget(double beta, std::size_t n);

}  // namespace msmr
