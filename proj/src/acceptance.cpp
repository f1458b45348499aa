#include "msmr/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "msmr/certs.hpp"
#include "msmr/hash.hpp"
#include "msmr/rng.hpp"

namespace msmr {

using nlohmann::json;

namespace {

void say(const AcceptOptions& o, const std::string& msg) {
  if (o.progress) *o.progress << msg << std::endl;
}

// Reads the evaluator's bounds; unknown or missing keys are config errors.
class Bounds {
 public:
  Bounds(const CriterionSpec& spec, std::vector<std::string> keys) : spec_(spec) {
    if (!spec.bounds.is_object()) throw ConfigError(spec.id + ": bounds must be an object");
    for (const auto& [k, v] : spec.bounds.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw ConfigError(spec.id + ": unknown bounds key " + k);
      }
    }
    for (const auto& k : keys) {
      if (!spec.bounds.contains(k)) throw ConfigError(spec.id + ": missing bounds key " + k);
    }
  }
  double num(const std::string& key) const { return spec_.bounds.at(key).get<double>(); }
  std::uint64_t u64(const std::string& key) const {
    return spec_.bounds.at(key).get<std::uint64_t>();
  }

 private:
  const CriterionSpec& spec_;
};

void expect_runs(const CriterionSpec& spec, std::size_t count) {
  if (spec.runs.size() != count) {
    throw ConfigError(spec.id + ": expected " + std::to_string(count) + " runs, found " +
                      std::to_string(spec.runs.size()));
  }
}

RunConfig prepared(const RunConfig& run, const AcceptOptions& o) {
  RunConfig r = run;
  if (o.seed) r.seed = *o.seed;
  if (o.trials) r.trials = *o.trials;
  r.archive = false;
  return r;
}

std::uint64_t required(const CriterionSpec& spec, std::size_t trials) {
  // min_pass is stated per 100 trials; scaled up when fewer trials run
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(spec.min_pass) *
                                              static_cast<double>(trials) / 100.0 - 1e-9));
}

template <class R, class F>
std::vector<R> trials_of(const RunConfig& run, const AcceptOptions& o, F fn) {
  say(o, "  " + run.experiment + ": " + to_string(run.protocol) + " n=" + std::to_string(run.n) +
             " x" + std::to_string(run.trials));
  return parallel_trials(run.trials, o.threads, fn);
}

// ----- consensus-type criteria -----

CriterionVerdict eval_spiral(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"within_rounds"});
  expect_runs(spec, 1);
  const RunConfig run = prepared(spec.runs[0], o);
  const auto within = b.u64("within_rounds");
  auto hits = trials_of<std::optional<std::uint64_t>>(run, o, [&](std::size_t t) {
    ConsensusReport r = run_consensus(consensus_config(run, t));
    for (const auto& row : r.series) {
      if (row.useful_count == 0) return std::optional<std::uint64_t>(row.round);
    }
    return std::optional<std::uint64_t>();
  });
  CriterionVerdict v{spec.id, {}, {}, {}};
  VerdictPart p{"zero-useful", 0, run.trials, required(spec, run.trials)};
  std::uint64_t worst = 0;
  for (const auto& h : hits) {
    if (h && *h <= within) ++p.passed;
    if (h) worst = std::max(worst, *h);
  }
  v.parts.push_back(p);
  v.detail = "latest zero-useful round " + std::to_string(worst) + ", bound " + std::to_string(within);
  v.data = json{{"latest_round", worst}, {"within_rounds", within}};
  return v;
}

CriterionVerdict eval_availability(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"min_fraction", "after_round"});
  const double min_fraction = b.num("min_fraction");
  const auto after = b.u64("after_round");
  CriterionVerdict v{spec.id, {}, {}, json::object()};
  std::ostringstream detail;
  for (const auto& raw : spec.runs) {
    const RunConfig run = prepared(raw, o);
    auto mins = trials_of<double>(run, o, [&](std::size_t t) {
      ConsensusReport r = run_consensus(consensus_config(run, t));
      Trace tr{{"round", "useful_count"}, {}};
      for (const auto& row : r.series) {
        tr.rows.push_back({static_cast<std::int64_t>(row.round),
                           static_cast<std::int64_t>(row.useful_count)});
      }
      return trace_metrics(tr, run.n, after).min_useful_fraction_after.value_or(0.0);
    });
    VerdictPart p{to_string(run.adversary.kind), 0, run.trials, required(spec, run.trials)};
    double lowest = 1.0;
    for (double m : mins) {
      if (m >= min_fraction) ++p.passed;
      lowest = std::min(lowest, m);
    }
    v.parts.push_back(p);
    detail << p.name << " lowest fraction " << lowest << "; ";
    v.data[p.name] = json{{"lowest_fraction", lowest}};
  }
  v.detail = detail.str() + "bound " + std::to_string(min_fraction);
  return v;
}

CriterionVerdict eval_agreement(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"within_rounds"});
  expect_runs(spec, 1);
  const RunConfig run = prepared(spec.runs[0], o);
  const auto within = b.u64("within_rounds");
  struct Out {
    std::optional<std::uint64_t> agreement;
    std::uint64_t validity = 0;
  };
  auto outs = trials_of<Out>(run, o, [&](std::size_t t) {
    ConsensusReport r = run_consensus(consensus_config(run, t));
    return Out{r.agreement_round, r.validity_violations};
  });
  VerdictPart agree{"agreement", 0, run.trials, required(spec, run.trials)};
  VerdictPart valid{"validity", 0, run.trials, run.trials};
  std::uint64_t worst = 0;
  for (const auto& x : outs) {
    if (x.agreement && *x.agreement <= within) ++agree.passed;
    if (x.agreement) worst = std::max(worst, *x.agreement);
    if (x.validity == 0) ++valid.passed;
  }
  CriterionVerdict v{spec.id, {agree, valid}, {}, {}};
  v.detail = "latest agreement round " + std::to_string(worst) + ", bound " + std::to_string(within);
  v.data = json{{"latest_agreement", worst}};
  return v;
}

CriterionVerdict eval_gossip(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"within_rounds"});
  expect_runs(spec, 2);
  const auto within = b.u64("within_rounds");
  CriterionVerdict v{spec.id, {}, {}, json::object()};
  for (std::size_t i = 0; i < 2; ++i) {
    const RunConfig run = prepared(spec.runs[i], o);
    struct Out {
      std::optional<std::uint64_t> complete, extinct;
    };
    auto outs = trials_of<Out>(run, o, [&](std::size_t t) {
      ConsensusReport r = run_consensus(consensus_config(run, t));
      return Out{r.broadcast_complete_round, r.broadcast_extinct_round};
    });
    VerdictPart p{i == 0 ? "spread" : "dichotomy", 0, run.trials, required(spec, run.trials)};
    std::uint64_t all = 0, none = 0;
    for (const auto& x : outs) {
      const bool complete = x.complete && *x.complete <= within;
      const bool extinct = x.extinct && *x.extinct <= within;
      all += complete;
      none += extinct;
      if (i == 0 ? complete : (complete || extinct)) ++p.passed;
    }
    v.parts.push_back(p);
    v.data[p.name] = json{{"all", all}, {"none", none}};
  }
  v.detail = "spread all=" + v.data["spread"]["all"].dump() + "; single copy all=" +
             v.data["dichotomy"]["all"].dump() + " none=" + v.data["dichotomy"]["none"].dump();
  return v;
}

// ----- commitment and certificates -----

struct CommitSummary {
  std::uint64_t T = 0;
  std::uint64_t safety = 0, conflicts = 0;
  std::uint64_t shrinkage = 0, validity = 0, repetition = 0;
  bool all_committed = false;
  std::uint64_t max_latency = 0;
  CertificateStats certs;
};

CommitSummary summarize(const CommitReport& r) {
  CommitSummary s;
  s.T = r.T;
  s.safety = r.safety_violations;
  s.conflicts = r.conflicting_commits;
  s.shrinkage = r.shrinkage_violations;
  s.validity = r.validity_violations;
  s.repetition = r.repetition_violations;
  s.all_committed = !r.commands.empty();
  for (const auto& c : r.commands) {
    if (!c.commit_round || !c.injected_round) {
      s.all_committed = false;
      continue;
    }
    s.max_latency = std::max(s.max_latency, *c.commit_round - *c.injected_round);
  }
  s.certs = r.certs;
  return s;
}

class CommitCache {
 public:
  const std::vector<CommitSummary>& get(const RunConfig& run, const AcceptOptions& o) {
    const std::string key = run.to_json().dump();
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      say(o, "  " + run.experiment + ": reusing commitment trials");
      return it->second;
    }
    auto rows = trials_of<CommitSummary>(
        run, o, [&](std::size_t t) { return summarize(run_commit(commit_config(run, t))); });
    return cache_.emplace(key, std::move(rows)).first->second;
  }

 private:
  std::map<std::string, std::vector<CommitSummary>> cache_;
};

CriterionVerdict eval_commit(const CriterionSpec& spec, const AcceptOptions& o, CommitCache& cache) {
  Bounds b(spec, {"latency_T"});
  expect_runs(spec, 1);
  const RunConfig run = prepared(spec.runs[0], o);
  const auto& rows = cache.get(run, o);
  const double factor = b.num("latency_T");
  VerdictPart safety{"safety", 0, run.trials, run.trials};
  VerdictPart live{"liveness", 0, run.trials, required(spec, run.trials)};
  VerdictPart prefix{"prefix-audit", 0, run.trials, run.trials};
  std::uint64_t worst = 0, T = 0;
  for (const auto& s : rows) {
    T = s.T;
    if (s.safety == 0 && s.conflicts == 0) ++safety.passed;
    if (s.all_committed && static_cast<double>(s.max_latency) <= factor * static_cast<double>(s.T)) {
      ++live.passed;
    }
    if (s.shrinkage == 0 && s.validity == 0 && s.repetition == 0) ++prefix.passed;
    worst = std::max(worst, s.max_latency);
  }
  CriterionVerdict v{spec.id, {safety, live, prefix}, {}, {}};
  v.detail = "T=" + std::to_string(T) + " worst commit latency " + std::to_string(worst) +
             " rounds, bound " + std::to_string(static_cast<std::uint64_t>(factor * T));
  v.data = json{{"T", T}, {"worst_latency", worst}};
  return v;
}

CriterionVerdict eval_certs(const CriterionSpec& spec, const AcceptOptions& o, CommitCache& cache) {
  Bounds b(spec, {"checkpoints", "mutations", "forest_leaves"});
  expect_runs(spec, 1);
  const RunConfig run = prepared(spec.runs[0], o);
  const auto& rows = cache.get(run, o);
  VerdictPart accept{"accept", 0, run.trials, run.trials};
  VerdictPart reject{"mutations-rejected", 0, run.trials, run.trials};
  std::uint64_t checked = 0, accepted = 0, mutated = 0, slipped = 0;
  for (const auto& s : rows) {
    checked += s.certs.checked;
    accepted += s.certs.accepted;
    mutated += s.certs.mutations;
    slipped += s.certs.mutations_accepted;
    if (s.certs.checkpoints == b.u64("checkpoints") && s.certs.checked > 0 &&
        s.certs.accepted == s.certs.checked && s.certs.storage_violations == 0) {
      ++accept.passed;
    }
    if (s.certs.mutations == b.u64("mutations") && s.certs.mutations_accepted == 0) ++reject.passed;
  }
  std::string forest_detail;
  const bool forest = forest_matches_scratch(b.u64("forest_leaves"), &forest_detail);
  VerdictPart forest_part{"forest-roots", forest ? 1u : 0u, 1, 1};
  CriterionVerdict v{spec.id, {accept, reject, forest_part}, {}, {}};
  if (!o.golden.empty()) {
    std::string golden_detail;
    const bool ok = golden_vectors_match(o.golden, &golden_detail);
    v.parts.push_back(VerdictPart{"golden", ok ? 1u : 0u, 1, 1});
    if (!ok) forest_detail += " golden: " + golden_detail;
  }
  v.detail = std::to_string(accepted) + "/" + std::to_string(checked) + " certificates accepted, " +
             std::to_string(slipped) + "/" + std::to_string(mutated) + " mutations accepted" +
             (forest_detail.empty() ? "" : "; " + forest_detail);
  v.data = json{{"checked", checked}, {"accepted", accepted}, {"mutations", mutated},
                {"mutations_accepted", slipped}};
  return v;
}

// ----- recovery -----

CriterionVerdict eval_recovery(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"latency_T"});
  expect_runs(spec, 2);
  const double factor = b.num("latency_T");
  struct Out {
    std::uint64_t T = 0, surge_end = 0;
    std::optional<std::uint64_t> recovered, post_commit;
    std::uint64_t monotonicity = 0, audits = 0;
    bool aborted = false;
  };
  auto run_one = [&](const RunConfig& run) {
    return trials_of<Out>(run, o, [&](std::size_t t) {
      RecoveryReport r = run_recovery(recovery_config(run, t));
      Out x;
      x.T = r.T;
      x.surge_end = r.surge_end;
      x.recovered = r.recovered_round;
      x.post_commit = r.post_surge_commit_round;
      x.monotonicity = r.monotonicity_violations;
      x.audits = r.checkpoint_conflicts + r.mutual_exclusion_violations + r.causality_violations +
                 r.bottom_invariant_violations + r.safety_violations;
      x.aborted = r.aborted;
      return x;
    });
  };
  const RunConfig surge = prepared(spec.runs[0], o);
  const RunConfig attack = prepared(spec.runs[1], o);
  const auto a = run_one(surge);
  const auto c = run_one(attack);

  VerdictPart resumed{"resumed", 0, surge.trials, required(spec, surge.trials)};
  VerdictPart mono{"monotonicity", 0, surge.trials + attack.trials, surge.trials + attack.trials};
  VerdictPart audits{"recovery-audits", 0, surge.trials + attack.trials,
                     surge.trials + attack.trials};
  std::uint64_t worst = 0, worst_post = 0, T = 0;
  bool post_missing = false;
  for (const auto& x : a) {
    T = x.T;
    if (x.recovered && static_cast<double>(*x.recovered - x.surge_end) <=
                           factor * static_cast<double>(x.T)) {
      ++resumed.passed;
    }
    if (x.recovered) worst = std::max(worst, *x.recovered - x.surge_end);
    if (x.post_commit) {
      worst_post = std::max(worst_post, *x.post_commit - x.surge_end);
    } else {
      post_missing = true;
    }
  }
  for (const auto* set : {&a, &c}) {
    for (const auto& x : *set) {
      if (x.monotonicity == 0 && !x.aborted) ++mono.passed;
      if (x.audits == 0) ++audits.passed;
    }
  }
  CriterionVerdict v{spec.id, {resumed, mono, audits}, {}, {}};
  v.detail = "T=" + std::to_string(T) + " worst resume " + std::to_string(worst) +
             " rounds after surge, bound " + std::to_string(static_cast<std::uint64_t>(factor * T)) +
             "; first post-surge command committed within " + std::to_string(worst_post) +
             (post_missing ? " (missing in some trials)" : "");
  v.data = json{{"T", T}, {"worst_resume", worst}, {"worst_post_surge_commit", worst_post}};
  return v;
}

// ----- exact checks -----

CriterionVerdict eval_curves(const CriterionSpec& spec, const AcceptOptions&) {
  Bounds b(spec, {"steps_per_unit"});
  expect_runs(spec, 0);
  const auto steps = b.u64("steps_per_unit");
  struct Claim {
    Curve c;
    Rational lo, hi;
    SignClaim sign;
  };
  const std::vector<Claim> claims = {
      {Curve::g, 0, 1, SignClaim::nonpositive},
      {Curve::g_avail, Rational(1, 2), Rational(3, 4), SignClaim::nonnegative},
      {Curve::g_block, 0, 1, SignClaim::nonpositive},
  };
  CriterionVerdict v{spec.id, {}, {}, json::object()};
  std::ostringstream detail;
  for (const auto& cl : claims) {
    const SignScan s = sign_scan(curve_poly(cl.c), cl.lo, cl.hi, steps, cl.sign);
    v.parts.push_back(VerdictPart{to_string(cl.c), s.certified ? 1u : 0u, 1, 1});
    detail << to_string(cl.c) << " " << s.violations << " violations, extreme "
           << static_cast<double>(s.extreme) << " at " << static_cast<double>(s.extreme_x) << "; ";
    v.data[to_string(cl.c)] = json{{"grid_points", s.grid_points},
                                   {"violations", s.violations},
                                   {"uncertified_intervals", s.uncertified_intervals},
                                   {"extreme", static_cast<double>(s.extreme)}};
  }
  const Poly f = curve_poly(Curve::f);
  const bool ends = f.eval(Rational(0)) == 0 && f.eval(Rational(1)) == 1;
  v.parts.push_back(VerdictPart{"f-endpoints", ends ? 1u : 0u, 1, 1});
  v.detail = detail.str() + "f(0)=" + f.eval(Rational(0)).str() + " f(1)=" + f.eval(Rational(1)).str();
  return v;
}

CriterionVerdict eval_selection(const CriterionSpec& spec, const AcceptOptions&) {
  Bounds b(spec, {"n", "useful", "values"});
  expect_runs(spec, 0);
  const auto n = b.u64("n");
  const auto u = b.u64("useful");
  const auto q = b.u64("values");
  if (u > n || u == 0 || q == 0) throw ConfigError(spec.id + ": need 1 <= useful <= n, values >= 1");
  // every assignment of values 1..q to the useful servers
  std::vector<Key> assign(u, 1);
  VerdictPart p{"distributions-equal", 0, 0, 0};
  std::string first_diff;
  while (true) {
    std::vector<Value> all(n, std::nullopt), useful;
    for (std::size_t i = 0; i < u; ++i) {
      all[i] = assign[i];
      useful.emplace_back(assign[i]);
    }
    const auto lhs = exact_rule_distribution(all, RuleParams{6, 3});
    const auto rhs = exact_rule_distribution(useful, RuleParams{3, 3});
    ++p.total;
    ++p.required;
    if (lhs.output == rhs.output) {
      ++p.passed;
    } else if (first_diff.empty()) {
      first_diff = "differs for assignment starting " + std::to_string(assign[0]);
    }
    std::size_t pos = 0;
    while (pos < u && ++assign[pos] > q) assign[pos++] = 1;
    if (pos == u) break;
  }
  CriterionVerdict v{spec.id, {p}, {}, {}};
  v.detail = std::to_string(p.passed) + "/" + std::to_string(p.total) +
             " value assignments give identical conditional distributions" +
             (first_diff.empty() ? "" : "; " + first_diff);
  return v;
}

CriterionVerdict eval_gravity(const CriterionSpec& spec, const AcceptOptions& o) {
  Bounds b(spec, {"max_nt", "sample_nt", "samples", "sigmas"});
  expect_runs(spec, 0);
  const auto max_nt = b.u64("max_nt");
  VerdictPart sum{"sum-one", 0, max_nt, max_nt};
  VerdictPart argmax{"argmax", 0, max_nt, max_nt};
  for (std::uint64_t nt = 1; nt <= max_nt; ++nt) {
    Rational total = 0;
    for (std::uint64_t i = 1; i <= nt; ++i) total += gravity(i, nt);
    if (total == 1) ++sum.passed;
    if (gravity_argmax(nt) == (nt + 1) / 2) ++argmax.passed;
  }

  const auto nt = b.u64("sample_nt");
  const auto samples = b.u64("samples");
  const double sigmas = b.num("sigmas");
  const std::uint64_t seed = o.seed.value_or(1);
  std::vector<std::uint64_t> hits(nt + 1, 0);
  const RuleParams rule{3, 3};
  Key replies[3];
  for (std::uint64_t s = 0; s < samples; ++s) {
    RngStream rng(seed, Entity::audit, s, 0, Purpose::sample);
    for (auto& r : replies) r = rng.uniform(nt) + 1;
    const Value out = median_step(std::nullopt, std::span<const Key>(replies, 3), rule, rng);
    ++hits[*out];
  }
  VerdictPart empirical{"empirical", 0, nt, nt};
  double worst_z = 0.0;
  for (std::uint64_t i = 1; i <= nt; ++i) {
    const double p = static_cast<double>(gravity(i, nt));
    const double mean = p * static_cast<double>(samples);
    const double sd = std::sqrt(mean * (1.0 - p));
    const double z = std::abs(static_cast<double>(hits[i]) - mean) / sd;
    worst_z = std::max(worst_z, z);
    if (z <= sigmas) ++empirical.passed;
  }
  CriterionVerdict v{spec.id, {sum, argmax, empirical}, {}, {}};
  std::ostringstream detail;
  detail << "largest deviation " << worst_z << " sigma at n_t=" << nt << " over " << samples
         << " samples";
  v.detail = detail.str();
  v.data = json{{"worst_z", worst_z}};
  return v;
}

}  // namespace

CriterionSpec CriterionSpec::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("criterion must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "criterion" && k != "description" && k != "min_pass" && k != "bounds" && k != "runs") {
      throw ConfigError("unknown criterion key: " + k);
    }
  }
  CriterionSpec s;
  try {
    s.id = j.at("criterion").get<std::string>();
    s.description = j.value("description", std::string());
    s.min_pass = j.value("min_pass", std::size_t{100});
    s.bounds = j.value("bounds", json::object());
    if (j.contains("runs")) {
      for (const auto& r : j.at("runs")) s.runs.push_back(RunConfig::from_json(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError("criterion: " + std::string(e.what()));
  }
  if (s.min_pass > 100) throw ConfigError(s.id + ": min_pass is out of 100");
  return s;
}

CriterionSpec load_criterion(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return CriterionSpec::from_json(j);
}

bool CriterionVerdict::pass() const {
  return !parts.empty() &&
         std::all_of(parts.begin(), parts.end(), [](const VerdictPart& p) { return p.pass(); });
}

namespace {
const VerdictPart* weakest(const std::vector<VerdictPart>& parts) {
  const VerdictPart* w = nullptr;
  for (const auto& p : parts) {
    if (!w) {
      w = &p;
      continue;
    }
    const bool fails = !p.pass(), wfails = !w->pass();
    const double margin = p.total ? static_cast<double>(p.passed) / p.total : 0.0;
    const double wmargin = w->total ? static_cast<double>(w->passed) / w->total : 0.0;
    if ((fails && !wfails) || (fails == wfails && margin < wmargin)) w = &p;
  }
  return w;
}
}  // namespace

std::uint64_t CriterionVerdict::passed() const {
  const auto* w = weakest(parts);
  return w ? w->passed : 0;
}

std::uint64_t CriterionVerdict::total() const {
  const auto* w = weakest(parts);
  return w ? w->total : 0;
}

double CriterionVerdict::threshold() const {
  const auto* w = weakest(parts);
  return w && w->total ? static_cast<double>(w->required) / static_cast<double>(w->total) : 1.0;
}

std::string CriterionVerdict::line() const {
  std::ostringstream os;
  os << id << " " << (pass() ? "PASS" : "FAIL");
  for (const auto& p : parts) {
    os << " " << p.name << "=" << p.passed << "/" << p.total << "(need " << p.required << ")";
  }
  if (!detail.empty()) os << " | " << detail;
  return os.str();
}

json CriterionVerdict::to_json() const {
  json j;
  j["criterion"] = id;
  j["pass"] = pass();
  j["passed"] = passed();
  j["total"] = total();
  j["threshold"] = threshold();
  auto& ps = j["parts"] = json::array();
  for (const auto& p : parts) {
    ps.push_back(json{{"name", p.name},
                      {"passed", p.passed},
                      {"total", p.total},
                      {"required", p.required},
                      {"pass", p.pass()}});
  }
  j["detail"] = detail;
  j["data"] = data;
  return j;
}

std::vector<std::string> suite_criteria(const std::string& suite) {
  if (suite == "curves") return {"A9"};
  if (suite == "consensus") return {"A1", "A2", "A3", "A4", "A10", "A11"};
  if (suite == "gossip") return {"A5"};
  if (suite == "smr" || suite == "commit") return {"A6"};
  if (suite == "certs") return {"A7"};
  if (suite == "recovery") return {"A8"};
  if (suite == "all") return {"A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "A11"};
  if (suite.size() >= 2 && suite[0] == 'A') {
    const auto all = suite_criteria("all");
    if (std::find(all.begin(), all.end(), suite) != all.end()) return {suite};
  }
  throw ConfigError("unknown acceptance suite: " + suite);
}

std::vector<CriterionVerdict> run_acceptance(const std::vector<std::string>& ids, const AcceptOptions& opts) {
  CommitCache cache;
  std::vector<CriterionVerdict> out;
  for (const auto& id : ids) {
    const CriterionSpec spec = load_criterion(opts.config_dir / (id + ".json"));
    if (spec.id != id) throw ConfigError(id + ".json declares criterion " + spec.id);
    say(opts, "[" + id + "] " + spec.description);
    CriterionVerdict v;
    if (id == "A1" || id == "A3") {
      v = eval_spiral(spec, opts);
    } else if (id == "A2") {
      v = eval_availability(spec, opts);
    } else if (id == "A4") {
      v = eval_agreement(spec, opts);
    } else if (id == "A5") {
      v = eval_gossip(spec, opts);
    } else if (id == "A6") {
      v = eval_commit(spec, opts, cache);
    } else if (id == "A7") {
      v = eval_certs(spec, opts, cache);
    } else if (id == "A8") {
      v = eval_recovery(spec, opts);
    } else if (id == "A9") {
      v = eval_curves(spec, opts);
    } else if (id == "A10") {
      v = eval_selection(spec, opts);
    } else if (id == "A11") {
      v = eval_gravity(spec, opts);
    } else {
      throw ConfigError("no evaluator for " + id);
    }
    out.push_back(std::move(v));
  }
  return out;
}

bool forest_matches_scratch(std::size_t max_leaves, std::string* detail) {
  std::vector<Hash> leaves;
  leaves.reserve(max_leaves);
  for (std::size_t i = 0; i < max_leaves; ++i) {
    leaves.push_back(leaf_hash(Command{1 + i % 7, 1 + i / 7, CommandKind::normal,
                                       "p" + std::to_string(i)}));
  }
  // level[h][j] = root of the perfect subtree over leaves [j*2^h, (j+1)*2^h)
  std::vector<std::vector<Hash>> level{leaves};
  while (level.back().size() > 1) {
    const auto& below = level.back();
    std::vector<Hash> up;
    for (std::size_t j = 0; j + 1 < below.size(); j += 2) up.push_back(node_hash(below[j], below[j + 1]));
    level.push_back(std::move(up));
  }
  MerkleForest forest;
  for (std::size_t m = 1; m <= max_leaves; ++m) {
    forest.append(leaves[m - 1]);
    std::vector<Peak> expect;
    std::size_t start = 0;
    for (int h = 63; h >= 0; --h) {
      if (!((m >> h) & 1u)) continue;
      expect.push_back(Peak{static_cast<unsigned>(h), level[h][start >> h]});
      start += std::size_t{1} << h;
    }
    if (forest.peaks() != expect) {
      if (detail) *detail = "forest roots differ at " + std::to_string(m) + " leaves";
      return false;
    }
  }
  if (detail) *detail = "forest roots equal for all prefixes up to " + std::to_string(max_leaves);
  return true;
}

bool golden_vectors_match(const std::filesystem::path& path, std::string* detail) {
  auto fail = [&](const std::string& why) {
    if (detail) *detail = why;
    return false;
  };
  std::ifstream in(path);
  if (!in) return fail("cannot open " + path.string());
  json j;
  try {
    in >> j;
    std::vector<Command> cmds;
    for (const auto& c : j.at("commands")) {
      cmds.push_back(Command{c.at("client").get<std::uint64_t>(), c.at("seq").get<std::uint64_t>(),
                             static_cast<CommandKind>(c.at("kind").get<int>()),
                             c.at("payload").get<std::string>()});
    }
    const auto& leaves = j.at("leaves");
    const auto& digests = j.at("digests");
    MerkleForest forest;
    Hash digest{};
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const Hash leaf = leaf_hash(cmds[i]);
      if (to_hex(leaf) != leaves.at(i).get<std::string>()) {
        return fail("leaf " + std::to_string(i) + " differs");
      }
      digest = extend_digest(digest, leaf);
      if (to_hex(digest) != digests.at(i).get<std::string>()) {
        return fail("digest " + std::to_string(i) + " differs");
      }
      forest.append(leaf);
      const auto& peaks = j.at("prefixes").at(i).at("peaks");
      if (peaks.size() != forest.peaks().size()) return fail("peak count differs at " + std::to_string(i + 1));
      for (std::size_t p = 0; p < peaks.size(); ++p) {
        if (peaks[p].at("height").get<unsigned>() != forest.peaks()[p].height ||
            peaks[p].at("hash").get<std::string>() != to_hex(forest.peaks()[p].hash)) {
          return fail("peak differs at " + std::to_string(i + 1));
        }
      }
    }
    const auto& cj = j.at("certificate");
    Certificate cert;
    cert.x = cmds.at(cj.at("command").get<std::size_t>());
    cert.position = cj.at("position").get<std::uint64_t>();
    for (const auto& link : cj.at("chain")) {
      cert.chain.push_back(ChainLink{link.at("side") == "right" ? Side::right : Side::left,
                                     hash_from_hex(link.at("hash").get<std::string>())});
    }
    std::string hex;
    for (unsigned char ch : encode_certificate(cert)) {
      static const char* digits = "0123456789abcdef";
      hex += digits[ch >> 4];
      hex += digits[ch & 15];
    }
    if (hex != cj.at("bytes").get<std::string>()) return fail("certificate encoding differs");
    const auto decoded = decode_certificate(encode_certificate(cert));
    if (!decoded || decoded->x != cert.x || decoded->position != cert.position ||
        decoded->chain != cert.chain) {
      return fail("certificate decoding differs");
    }
    ServerCertMeta meta;
    for (std::size_t i = 0; i < 2; ++i) on_commit_update(meta, cmds.at(i));
    if (verify_certificate(meta, cert) != Verdict::accept) return fail("golden certificate rejected");
  } catch (const json::exception& e) {
    return fail(std::string("malformed golden file: ") + e.what());
  }
  if (detail) *detail = "golden vectors match";
  return true;
}

}  // namespace msmr
