#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "msmr/medianrules.hpp"

namespace msmr {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Polynomial with rational coefficients, coeffs[i] multiplies x^i.
struct Poly {
  std::vector<Rational> coeffs;

  Rational eval(const Rational& x) const;
  double eval(double x) const;
};

enum class Curve { f, g, g_avail, g_block };
std::string to_string(Curve c);
Poly curve_poly(Curve c);
// Throws std::domain_error outside [0, 1].
double curve_value(Curve c, double x);
// x, f(x), f(f(x)), ... (steps + 1 values).
std::vector<double> iterate_f(double x0, std::size_t steps);

enum class SignClaim { nonpositive, nonnegative };

struct SignScan {
  std::uint64_t grid_points = 0;
  std::uint64_t violations = 0;
  Rational extreme;         // max for nonpositive claims, min for nonnegative ones
  Rational extreme_x;
  bool certified = false;   // Bernstein bounds confirm the claim between grid points
  std::uint64_t uncertified_intervals = 0;
};

// Exact scan of p on the grid lo + i/steps_per_unit covering [lo, hi].
SignScan sign_scan(const Poly& p, const Rational& lo, const Rational& hi,
                   std::uint64_t steps_per_unit, SignClaim claim);

// Probability that a median-rule server adopts the i-th smallest of n_t
// distinct useful values (1-based rank).
Rational gravity(std::uint64_t i, std::uint64_t n_t);
// First rank attaining the maximal gravity.
std::uint64_t gravity_argmax(std::uint64_t n_t);

double heavy_threshold(double n_t, double c);

// Exact output distribution of the (k, l) median rule for one requesting
// server: targets uniform over n servers with replacement; `values[j]` is
// the value of server j or nullopt when it does not answer. Returns the
// probability of each output value conditioned on receiving >= l replies,
// plus the probability of that event.
struct RuleDistribution {
  std::map<Key, Rational> output;
  Rational success;
};
RuleDistribution exact_rule_distribution(const std::vector<Value>& values,
                                         const RuleParams& params);

// ----- traces -----

// Per-round integer table with named columns.
struct Trace {
  std::vector<std::string> columns;
  std::vector<std::vector<std::int64_t>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  std::string to_csv() const;
};

// Throws std::invalid_argument on malformed input.
Trace parse_trace(const std::string& csv);

struct TraceMetrics {
  std::uint64_t rounds = 0;
  std::vector<double> useful_fraction;
  std::optional<std::uint64_t> agreement_round;
  std::optional<std::uint64_t> all_bottom_round;
  std::optional<double> min_useful_fraction_after;  // after `warmup` rounds
};

TraceMetrics trace_metrics(const Trace& trace, std::size_t n, std::uint64_t warmup = 0);

}  // namespace msmr
