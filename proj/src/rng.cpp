#include "msmr/rng.hpp"

#include <cmath>
#include <numeric>

#include "msmr/types.hpp"

namespace msmr {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t seed, Entity entity, std::uint64_t id,
                     std::uint64_t round, Purpose purpose) noexcept {
  std::uint64_t k = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  k = mix64(k ^ (static_cast<std::uint64_t>(entity) << 56) ^ id);
  k = mix64(k + round * 0x9E3779B97F4A7C15ULL);
  k = mix64(k ^ (static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ULL));
  key_ = k;
}

std::uint64_t RngStream::uniform(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::uniform01() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
  RngStream s(seed, Entity::trial, trial, 0, Purpose::seed);
  return s();
}

void draw_targets(RngStream& rng, std::size_t n, std::size_t k, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = 0; j < k; ++j) out.push_back(static_cast<std::size_t>(rng.uniform(n)));
}

void choose_subset(RngStream& rng, std::size_t m, std::size_t l,
                   std::vector<std::size_t>& out) {
  out.resize(m);
  std::iota(out.begin(), out.end(), std::size_t{0});
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform(m - i));
    std::swap(out[i], out[j]);
  }
  out.resize(l);
}

std::uint64_t log_budget(double c, std::size_t n) {
  const double v = c * std::log2(static_cast<double>(n));
  return static_cast<std::uint64_t>(std::ceil(v - 1e-9));
}

std::size_t blocking_budget(double beta, std::size_t n) {
  return static_cast<std::size_t>(std::floor(beta * static_cast<double>(n) + 1e-9));
}

}  // namespace msmr
