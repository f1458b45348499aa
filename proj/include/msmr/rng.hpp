#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace msmr {

enum class Entity : std::uint8_t {
  server = 1,
  adversary = 2,
  client = 3,
  trial = 4,
  init = 5,
  audit = 6,
};

enum class Purpose : std::uint8_t {
  pull_targets = 1,
  push_targets = 2,
  step = 3,
  block = 4,
  delivery = 5,
  init = 6,
  sample = 7,
  seed = 8,
};

std::uint64_t mix64(std::uint64_t x) noexcept;

// Counter-based stream keyed by (seed, entity, id, round, purpose).
// Two streams with different keys are independent; the same key always
// yields the same sequence, regardless of the order streams are created.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) noexcept : key_(key) {}
  RngStream(std::uint64_t seed, Entity entity, std::uint64_t id,
            std::uint64_t round, Purpose purpose) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix64(key_ + counter_);
  }

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound) noexcept;
  // Uniform in [0, 1).
  double uniform01() noexcept;
  bool bernoulli(double p) noexcept { return uniform01() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Trial seeds derived from a master seed.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

// k server indices in [0, n), uniform and independent (with replacement).
void draw_targets(RngStream& rng, std::size_t n, std::size_t k, std::vector<std::size_t>& out);

// Picks l distinct indices out of [0, m) uniformly; result in `out`.
void choose_subset(RngStream& rng, std::size_t m, std::size_t l,
                   std::vector<std::size_t>& out);

}  // namespace msmr
