#include "msmr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace msmr {

namespace {

Rational q(long long num, long long den = 1) { return Rational(num) / Rational(den); }

Poly add(const Poly& a, const Poly& b) {
  Poly out;
  out.coeffs.resize(std::max(a.coeffs.size(), b.coeffs.size()));
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) out.coeffs[i] += a.coeffs[i];
  for (std::size_t i = 0; i < b.coeffs.size(); ++i) out.coeffs[i] += b.coeffs[i];
  return out;
}

Poly scale(const Poly& a, const Rational& s) {
  Poly out = a;
  for (auto& c : out.coeffs) c *= s;
  return out;
}

Poly monomial(const Rational& c, std::size_t deg) {
  Poly p;
  p.coeffs.assign(deg + 1, Rational(0));
  p.coeffs[deg] = c;
  return p;
}

BigInt binom(unsigned n, unsigned k) {
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integer polynomial with the sign of p: coefficients times their common denominator.
std::vector<BigInt> integer_form(const Poly& p) {
  BigInt den = 1;
  for (const auto& c : p.coeffs) {
    const BigInt d = boost::multiprecision::denominator(c);
    den = den / boost::multiprecision::gcd(den, d) * d;
  }
  std::vector<BigInt> out;
  for (const auto& c : p.coeffs) {
    out.push_back(boost::multiprecision::numerator(c) * (den / boost::multiprecision::denominator(c)));
  }
  return out;
}

// Coefficients in t of N^d * P((i + t)/N), t in [0, 1].
std::vector<BigInt> shifted(const std::vector<BigInt>& P, const BigInt& i, const BigInt& N) {
  const unsigned d = static_cast<unsigned>(P.size() - 1);
  std::vector<BigInt> c(d + 1, 0);
  std::vector<BigInt> npow(d + 1, 1), ipow(d + 1, 1);
  for (unsigned k = 1; k <= d; ++k) {
    npow[k] = npow[k - 1] * N;
    ipow[k] = ipow[k - 1] * i;
  }
  for (unsigned k = 0; k <= d; ++k) {
    if (P[k] == 0) continue;
    for (unsigned j = 0; j <= k; ++j) c[j] += P[k] * binom(k, j) * ipow[k - j] * npow[d - k];
  }
  return c;
}

// Scaled Bernstein coefficients on [0, 1]; they share the sign pattern of
// the true coefficients and bound the polynomial's range.
std::vector<BigInt> bernstein(const std::vector<BigInt>& c) {
  const unsigned d = static_cast<unsigned>(c.size() - 1);
  BigInt l = 1;
  for (unsigned k = 0; k <= d; ++k) {
    const BigInt b = binom(d, k);
    l = l / boost::multiprecision::gcd(l, b) * b;
  }
  std::vector<BigInt> out(d + 1, 0);
  for (unsigned j = 0; j <= d; ++j) {
    for (unsigned m = 0; m <= j; ++m) out[j] += binom(j, m) * (l / binom(d, m)) * c[m];
  }
  return out;
}

bool holds(const BigInt& v, SignClaim claim) {
  return claim == SignClaim::nonpositive ? v <= 0 : v >= 0;
}

// Certifies the claim on [i/N, (i+1)/N] by Bernstein bounds with bisection.
bool certify(const std::vector<BigInt>& P, BigInt i, BigInt N, SignClaim claim, int depth) {
  const auto b = bernstein(shifted(P, i, N));
  if (std::all_of(b.begin(), b.end(), [&](const BigInt& v) { return holds(v, claim); })) return true;
  if (depth == 0) return false;
  return certify(P, 2 * i, 2 * N, claim, depth - 1) && certify(P, 2 * i + 1, 2 * N, claim, depth - 1);
}

}  // namespace

Rational Poly::eval(const Rational& x) const {
  Rational r = 0;
  for (std::size_t i = coeffs.size(); i-- > 0;) r = r * x + coeffs[i];
  return r;
}

double Poly::eval(double x) const {
  double r = 0;
  for (std::size_t i = coeffs.size(); i-- > 0;) r = r * x + static_cast<double>(coeffs[i]);
  return r;
}

std::string to_string(Curve c) {
  switch (c) {
    case Curve::f: return "f";
    case Curve::g: return "g";
    case Curve::g_avail: return "g_avail";
    case Curve::g_block: return "g_block";
  }
  return "f";
}

Poly curve_poly(Curve c) {
  const Poly f{{q(0), q(0), q(0), q(20), q(-45), q(36), q(-10)}};
  switch (c) {
    case Curve::f: return f;
    case Curve::g: return add(f, monomial(q(-3), 2));
    case Curve::g_avail: return add(scale(f, q(4, 5)), monomial(q(-41, 40), 1));
    case Curve::g_block: return add(scale(f, q(7, 10)), monomial(q(-39, 40), 1));
  }
  return f;
}

double curve_value(Curve c, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("curve argument outside [0, 1]");
  return curve_poly(c).eval(x);
}

std::vector<double> iterate_f(double x0, std::size_t steps) {
  const Poly f = curve_poly(Curve::f);
  std::vector<double> out{x0};
  for (std::size_t i = 0; i < steps; ++i) out.push_back(f.eval(out.back()));
  return out;
}

SignScan sign_scan(const Poly& p, const Rational& lo, const Rational& hi,
                   std::uint64_t steps_per_unit, SignClaim claim) {
  SignScan out;
  const BigInt N = steps_per_unit;
  const Rational lo_scaled = lo * Rational(N);
  const Rational hi_scaled = hi * Rational(N);
  if (boost::multiprecision::denominator(lo_scaled) != 1 ||
      boost::multiprecision::denominator(hi_scaled) != 1) {
    throw std::invalid_argument("scan bounds must lie on the grid");
  }
  const BigInt first = boost::multiprecision::numerator(lo_scaled);
  const BigInt last = boost::multiprecision::numerator(hi_scaled);
  const auto P = integer_form(p);
  const unsigned d = static_cast<unsigned>(P.size() - 1);
  BigInt nd = 1;
  for (unsigned k = 0; k < d; ++k) nd *= N;

  bool have = false;
  BigInt best_i = first;
  BigInt best_v = 0;
  for (BigInt i = first; i <= last; ++i) {
    BigInt v = 0;  // N^d * P(i/N)
    BigInt ipow = 1, npow = nd;
    for (unsigned k = 0; k <= d; ++k) {
      v += P[k] * ipow * npow;
      ipow *= i;
      if (k < d) npow /= N;
    }
    ++out.grid_points;
    if (!holds(v, claim)) ++out.violations;
    const bool better = claim == SignClaim::nonpositive ? v > best_v : v < best_v;
    if (!have || better) {
      have = true;
      best_v = v;
      best_i = i;
    }
  }
  out.extreme_x = Rational(best_i) / Rational(N);
  out.extreme = p.eval(out.extreme_x);

  for (BigInt i = first; i < last; ++i) {
    if (!certify(P, i, N, claim, 6)) ++out.uncertified_intervals;
  }
  out.certified = out.violations == 0 && out.uncertified_intervals == 0;
  return out;
}

Rational gravity(std::uint64_t i, std::uint64_t n_t) {
  if (i < 1 || i > n_t) throw std::domain_error("gravity rank outside [1, n_t]");
  const BigInt ii = i, n = n_t;
  return Rational(6 * (ii - 1) * (n - ii) + 3 * n - 2) / Rational(n * n * n);
}

std::uint64_t gravity_argmax(std::uint64_t n_t) {
  std::uint64_t best = 1;
  Rational best_v = gravity(1, n_t);
  for (std::uint64_t i = 2; i <= n_t; ++i) {
    const Rational v = gravity(i, n_t);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

double heavy_threshold(double n_t, double c) {
  if (c <= 0.0 || n_t <= 1.0) return 0.0;
  return 2.0 * std::sqrt(c * n_t * std::log(n_t));
}

RuleDistribution exact_rule_distribution(const std::vector<Value>& values,
                                         const RuleParams& params) {
  params.validate();
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("no servers");
  // counts[m][v]: over tuples with m replies, number of (tuple, l-subset)
  // pairs whose median is v; tuples[m]: number of such tuples.
  std::vector<std::map<Key, std::uint64_t>> counts(params.k + 1);
  std::vector<std::uint64_t> tuples(params.k + 1, 0);
  std::vector<std::size_t> targets(params.k, 0);
  std::vector<Key> replies;
  std::vector<Key> chosen;
  while (true) {
    replies.clear();
    for (std::size_t t : targets) {
      if (values[t]) replies.push_back(*values[t]);
    }
    const std::size_t m = replies.size();
    ++tuples[m];
    if (m >= params.l) {
      std::vector<bool> mask(m, false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(params.l), true);
      do {
        chosen.clear();
        for (std::size_t a = 0; a < m; ++a) {
          if (mask[a]) chosen.push_back(replies[a]);
        }
        ++counts[m][median_of(chosen)];
      } while (std::prev_permutation(mask.begin(), mask.end()));
    }
    std::size_t pos = 0;
    while (pos < params.k && ++targets[pos] == n) targets[pos++] = 0;
    if (pos == params.k) break;
  }
  BigInt all = 1;
  for (std::size_t j = 0; j < params.k; ++j) all *= n;
  RuleDistribution out;
  out.success = 0;
  for (std::size_t m = params.l; m <= params.k; ++m) {
    out.success += Rational(BigInt(tuples[m])) / Rational(all);
    const BigInt subsets = binom(static_cast<unsigned>(m), static_cast<unsigned>(params.l));
    for (const auto& [v, c] : counts[m]) {
      out.output[v] += Rational(BigInt(c)) / Rational(subsets * all);
    }
  }
  if (out.success > 0) {
    for (auto& [v, p] : out.output) p /= out.success;
  }
  return out;
}

// ----- traces -----

std::optional<std::size_t> Trace::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::string Trace::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

Trace parse_trace(const std::string& csv) {
  Trace t;
  std::istringstream in(csv);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line) || line.empty()) throw std::invalid_argument("trace has no header");
  t.columns = split(line);
  if (!t.column("round")) throw std::invalid_argument("trace lacks a round column");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(t.columns.size()));
    }
    std::vector<std::int64_t> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      std::int64_t v = 0;
      try {
        v = std::stoll(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (c.empty() || used != c.size()) {
        throw std::invalid_argument("trace line " + std::to_string(lineno) + ": bad integer '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

TraceMetrics trace_metrics(const Trace& trace, std::size_t n, std::uint64_t warmup) {
  TraceMetrics m;
  const auto round = trace.column("round");
  if (!round) throw std::invalid_argument("trace lacks a round column");
  const auto useful = trace.column("useful_count");
  const auto agreed = trace.column("agreed");
  m.rounds = trace.rows.size();
  for (const auto& row : trace.rows) {
    const auto r = static_cast<std::uint64_t>(row[*round]);
    if (useful) {
      const double frac = n ? static_cast<double>(row[*useful]) / static_cast<double>(n) : 0.0;
      m.useful_fraction.push_back(frac);
      if (row[*useful] == 0 && !m.all_bottom_round) m.all_bottom_round = r;
      if (r > warmup) {
        m.min_useful_fraction_after =
            m.min_useful_fraction_after ? std::min(*m.min_useful_fraction_after, frac) : frac;
      }
    }
    if (agreed && row[*agreed] && !m.agreement_round) m.agreement_round = r;
  }
  return m;
}

}  // namespace msmr
