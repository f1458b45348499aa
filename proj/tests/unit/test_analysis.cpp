#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>

#include "msmr/analysis.hpp"

using namespace msmr;

namespace {

Rational q(long long a, long long b = 1) { return Rational(a) / Rational(b); }

BigInt binom(unsigned n, unsigned k) {
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Oracle for f: probability that a binomial(6, x) count reaches 3.
Rational tail6(const Rational& x) {
  Rational s = 0;
  for (unsigned j = 3; j <= 6; ++j) {
    Rational term = Rational(binom(6, j));
    for (unsigned a = 0; a < j; ++a) term *= x;
    for (unsigned b = 0; b < 6 - j; ++b) term *= (1 - x);
    s += term;
  }
  return s;
}

// Oracle for the rule distribution: enumerate every ordered target tuple and
// every l-subset of the replies it produces.
std::map<Key, Rational> brute_distribution(const std::vector<Value>& values, std::size_t k,
                                           std::size_t l, Rational* success) {
  const std::size_t n = values.size();
  std::map<Key, Rational> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= n;
  Rational ok = 0;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<Key> replies;
    std::size_t c = code;
    for (std::size_t i = 0; i < k; ++i) {
      if (values[c % n]) replies.push_back(*values[c % n]);
      c /= n;
    }
    if (replies.size() < l) continue;
    ok += 1;
    // all l-subsets by bitmask
    std::map<Key, std::size_t> med;
    std::size_t subsets = 0;
    for (std::uint32_t mask = 0; mask < (1u << replies.size()); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != l) continue;
      std::vector<Key> pick;
      for (std::size_t b = 0; b < replies.size(); ++b) {
        if (mask >> b & 1) pick.push_back(replies[b]);
      }
      std::sort(pick.begin(), pick.end());
      ++med[pick[pick.size() / 2]];
      ++subsets;
    }
    for (auto& [v, cnt] : med) out[v] += Rational(cnt) / Rational(subsets);
  }
  for (auto& [v, p] : out) p /= ok;
  if (success) *success = ok / Rational(total);
  return out;
}

}  // namespace

TEST(Curves, FValues) {
  EXPECT_DOUBLE_EQ(curve_value(Curve::f, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(curve_value(Curve::f, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(curve_value(Curve::f, 0.5), 0.65625);
  EXPECT_THROW(curve_value(Curve::f, -0.01), std::domain_error);
  EXPECT_THROW(curve_value(Curve::g, 1.5), std::domain_error);
  EXPECT_THROW(curve_value(Curve::g, std::nan("")), std::domain_error);
}

TEST(Curves, FMatchesBinomialTail) {
  const Poly f = curve_poly(Curve::f);
  for (int i = 0; i <= 200; ++i) {
    const Rational x = q(i, 200);
    EXPECT_EQ(f.eval(x), tail6(x)) << i;
  }
}

TEST(Curves, RelatedToF) {
  const Poly f = curve_poly(Curve::f);
  const Poly g = curve_poly(Curve::g), ga = curve_poly(Curve::g_avail), gb = curve_poly(Curve::g_block);
  for (int i = 0; i <= 50; ++i) {
    const Rational x = q(i, 50);
    EXPECT_EQ(g.eval(x), f.eval(x) - 3 * x * x);
    EXPECT_EQ(ga.eval(x), q(4, 5) * f.eval(x) - q(41, 40) * x);
    EXPECT_EQ(gb.eval(x), q(7, 10) * f.eval(x) - q(39, 40) * x);
  }
}

TEST(Curves, IterateF) {
  const auto xs = iterate_f(0.9, 5);
  ASSERT_EQ(xs.size(), 6u);
  EXPECT_DOUBLE_EQ(xs[0], 0.9);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double x = xs[i - 1];
    EXPECT_NEAR(xs[i], 20 * std::pow(x, 3) - 45 * std::pow(x, 4) + 36 * std::pow(x, 5) - 10 * std::pow(x, 6),
                1e-12);
    EXPECT_GE(xs[i], xs[i - 1] - 1e-15);  // f(x) >= x above one half
  }
  const auto down = iterate_f(0.3, 8);
  EXPECT_LT(down.back(), 1e-6);
}

TEST(SignScan, SimplePolynomials) {
  const Poly bowl{{q(0), q(-1), q(1)}};  // x^2 - x
  auto s = sign_scan(bowl, q(0), q(1), 10, SignClaim::nonpositive);
  EXPECT_EQ(s.grid_points, 11u);
  EXPECT_EQ(s.violations, 0u);
  EXPECT_EQ(s.extreme, 0);
  EXPECT_TRUE(s.certified);

  const Poly line{{q(-1, 2), q(1)}};  // x - 1/2
  s = sign_scan(line, q(0), q(1), 10, SignClaim::nonpositive);
  EXPECT_EQ(s.violations, 5u);
  EXPECT_EQ(s.extreme, q(1, 2));
  EXPECT_EQ(s.extreme_x, q(1));
  EXPECT_FALSE(s.certified);
  s = sign_scan(line, q(1, 2), q(1), 10, SignClaim::nonnegative);
  EXPECT_EQ(s.grid_points, 6u);
  EXPECT_EQ(s.violations, 0u);
  EXPECT_EQ(s.extreme, 0);

  // positive only strictly between grid points: grid passes, certification fails
  const Poly bump{{q(0), q(1, 10), q(-1)}};  // x(1/10 - x)
  s = sign_scan(bump, q(0), q(1, 10), 10, SignClaim::nonpositive);
  EXPECT_EQ(s.violations, 0u);
  EXPECT_FALSE(s.certified);

  EXPECT_THROW(sign_scan(line, q(1, 3), q(1), 10, SignClaim::nonpositive), std::invalid_argument);
}

TEST(SignScan, CurveClaims) {
  const auto g = sign_scan(curve_poly(Curve::g), q(0), q(1), 1000, SignClaim::nonpositive);
  EXPECT_EQ(g.violations, 0u);
  EXPECT_TRUE(g.certified);
  const auto ga = sign_scan(curve_poly(Curve::g_avail), q(1, 2), q(3, 4), 1000, SignClaim::nonnegative);
  EXPECT_EQ(ga.violations, 0u);
  EXPECT_TRUE(ga.certified);
  const auto gb = sign_scan(curve_poly(Curve::g_block), q(0), q(1), 1000, SignClaim::nonpositive);
  EXPECT_EQ(gb.violations, 0u);
  EXPECT_TRUE(gb.certified);
}

TEST(Gravity, EnumerationOracles) {
  EXPECT_EQ(gravity(1, 1), 1);
  for (std::uint64_t nt : {3u, 5u, 8u}) {
    std::vector<std::uint64_t> count(nt + 1, 0);
    for (std::uint64_t a = 1; a <= nt; ++a)
      for (std::uint64_t b = 1; b <= nt; ++b)
        for (std::uint64_t c = 1; c <= nt; ++c) {
          std::array<std::uint64_t, 3> t{a, b, c};
          std::sort(t.begin(), t.end());
          ++count[t[1]];
        }
    for (std::uint64_t i = 1; i <= nt; ++i) {
      EXPECT_EQ(gravity(i, nt), Rational(count[i]) / Rational(nt * nt * nt)) << nt << " " << i;
    }
  }
  EXPECT_EQ(gravity(1, 3), q(7, 27));
  EXPECT_EQ(gravity(2, 3), q(13, 27));
  EXPECT_EQ(gravity(3, 5), q(37, 125));
  EXPECT_THROW(gravity(0, 5), std::domain_error);
  EXPECT_THROW(gravity(6, 5), std::domain_error);
}

TEST(Gravity, SumsToOneAndPeaksInTheMiddle) {
  for (std::uint64_t nt = 1; nt <= 64; ++nt) {
    Rational s = 0;
    for (std::uint64_t i = 1; i <= nt; ++i) s += gravity(i, nt);
    EXPECT_EQ(s, 1) << nt;
    EXPECT_EQ(gravity_argmax(nt), (nt + 1) / 2) << nt;
    if (nt >= 20) {
      const double peak = gravity((nt + 1) / 2, nt).convert_to<double>();
      EXPECT_NEAR(peak, 1.5 / nt, 0.1 * 1.5 / nt) << nt;
    }
  }
}

TEST(HeavyThreshold, Examples) {
  EXPECT_NEAR(heavy_threshold(2, 1), 2.355, 1e-3);
  EXPECT_NEAR(heavy_threshold(1024, 1), 168.5, 0.05);
  EXPECT_EQ(heavy_threshold(1024, 0), 0.0);
}

TEST(RuleDistribution, SelectionEquivalenceAgainstEnumeration) {
  // four servers, one bottom: (6,3) over all equals (3,3) over the useful ones
  const std::vector<std::vector<Value>> cases = {
      {Value(1), Value(2), Value(3), std::nullopt},
      {Value(1), Value(1), Value(3), std::nullopt},
      {std::nullopt, Value(2), Value(2), Value(2)},
  };
  for (const auto& vals : cases) {
    Rational success_all;
    const auto brute_all = brute_distribution(vals, 6, 3, &success_all);
    std::vector<Value> useful;
    for (const auto& v : vals) {
      if (v) useful.push_back(v);
    }
    const auto brute_useful = brute_distribution(useful, 3, 3, nullptr);
    EXPECT_EQ(brute_all, brute_useful);

    const auto d = exact_rule_distribution(vals, RuleParams{6, 3});
    EXPECT_EQ(d.output, brute_all);
    EXPECT_EQ(d.success, success_all);
    const auto du = exact_rule_distribution(useful, RuleParams{3, 3});
    EXPECT_EQ(du.output, brute_useful);
    EXPECT_EQ(du.success, 1);
  }
  // distinct values reduce to gravity
  const auto d = exact_rule_distribution({Value(10), Value(20), Value(30), Value(40), Value(50)},
                                         RuleParams{3, 3});
  for (std::uint64_t i = 1; i <= 5; ++i) EXPECT_EQ(d.output.at(10 * i), gravity(i, 5));
}

TEST(Trace, ParseAndRoundTrip) {
  const std::string csv = "round,useful_count,agreed\n1,10,0\n2,8,0\n3,9,1\n4,0,1\n";
  const Trace t = parse_trace(csv);
  EXPECT_EQ(t.columns.size(), 3u);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.to_csv(), csv);
  EXPECT_EQ(t.column("agreed"), std::optional<std::size_t>(2));
  EXPECT_FALSE(t.column("missing"));
  const auto m = trace_metrics(t, 10, 1);
  EXPECT_EQ(m.rounds, 4u);
  EXPECT_EQ(m.agreement_round, std::optional<std::uint64_t>(3));
  EXPECT_EQ(m.all_bottom_round, std::optional<std::uint64_t>(4));
  ASSERT_TRUE(m.min_useful_fraction_after);
  EXPECT_DOUBLE_EQ(*m.min_useful_fraction_after, 0.0);
  ASSERT_EQ(m.useful_fraction.size(), 4u);
  EXPECT_DOUBLE_EQ(m.useful_fraction[1], 0.8);
}

TEST(Trace, ParseErrors) {
  EXPECT_THROW(parse_trace(""), std::invalid_argument);
  EXPECT_THROW(parse_trace("useful_count\n3\n"), std::invalid_argument);
  EXPECT_THROW(parse_trace("round,x\n1\n"), std::invalid_argument);
  EXPECT_THROW(parse_trace("round,x\n1,2,3\n"), std::invalid_argument);
  EXPECT_THROW(parse_trace("round,x\n1,abc\n"), std::invalid_argument);
  EXPECT_THROW(parse_trace("round,x\n1,\n"), std::invalid_argument);
  EXPECT_THROW(parse_trace("round,x\n1,2x\n"), std::invalid_argument);
}

TEST(Trace, UnanimityMetrics) {
  const Trace t = parse_trace("round,useful_count,agreed\n1,64,1\n");
  EXPECT_EQ(trace_metrics(t, 64).agreement_round, std::optional<std::uint64_t>(1));
  EXPECT_FALSE(trace_metrics(t, 64).all_bottom_round);
}
