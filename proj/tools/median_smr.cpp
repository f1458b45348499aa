// Command-line front end: experiment runs, drift curves, acceptance suite, replay.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "msmr/acceptance.hpp"
#include "msmr/analysis.hpp"
#include "msmr/runner.hpp"

#ifndef MSMR_ACCEPTANCE_DIR
#define MSMR_ACCEPTANCE_DIR "configs/acceptance"
#endif
#ifndef MSMR_GOLDEN_FILE
#define MSMR_GOLDEN_FILE ""
#endif

using namespace msmr;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t trials = 1;
  std::string out = "out";
  std::size_t threads = default_threads();
};

struct RunFlags {
  std::string experiment;
  std::size_t n = 0;
  std::uint64_t rounds = 0;
  std::uint64_t alpha = 1;
  std::size_t k = 6, l = 3;
  std::string adversary;
  double beta = 0.0;
  std::string adversary_json;
  std::string init;
  std::string rule;
  double sigma = 5.0;
  std::uint64_t T = 0;
  std::size_t clients = 0, commands = 0;
  bool certs = false;
  bool archive = false;
  std::string schedule;
};

void add_run_flags(CLI::App* sub, RunFlags& f, Protocol p) {
  sub->add_option("--experiment", f.experiment, "experiment name (output subdirectory)");
  sub->add_option("--n", f.n, "number of servers");
  sub->add_option("--rounds", f.rounds, "round budget");
  sub->add_option("--alpha", f.alpha, "adversary lateness");
  sub->add_option("--k", f.k, "pull requests per round");
  sub->add_option("--l", f.l, "replies used per step (odd)");
  sub->add_option("--adversary", f.adversary,
                  "none | uniform-random | sticky | target-useful | permanent-set | "
                  "surge-schedule | partition");
  sub->add_option("--beta", f.beta, "blocking fraction");
  sub->add_option("--adversary-json", f.adversary_json, "full adversary spec as JSON");
  sub->add_flag("--archive", f.archive, "write per-trial snapshot archives");
  if (p == Protocol::consensus) {
    sub->add_option("--init", f.init, "binary | unanimous=V | fraction-useful=P | planted=M | keys=FILE");
    sub->add_option("--rule", f.rule, "median | priority | gossip");
  }
  if (p != Protocol::consensus) sub->add_option("--sigma", f.sigma, "append fan-out constant");
  if (p == Protocol::smr) {
    sub->add_option("--inject-schedule", f.schedule,
                    "JSON file: array of {round, client, seq, payload}")
        ->check(CLI::ExistingFile);
  }
  if (p == Protocol::commit || p == Protocol::recover) {
    sub->add_option("--T", f.T, "commitment age / window length (0 derives it)");
    sub->add_option("--clients", f.clients, "number of clients");
    sub->add_option("--commands", f.commands, "commands per client");
  }
  if (p == Protocol::commit) sub->add_flag("--certs", f.certs, "check client certificates");
}

RunConfig build_config(CLI::App* sub, const Globals& g, const RunFlags& f, Protocol p) {
  RunConfig c = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.config.empty()) {
    c.protocol = p;
    c.experiment = to_string(p);
    if (p != Protocol::consensus) c.n = p == Protocol::smr ? 256 : 512;
  } else if (c.protocol != p) {
    throw ConfigError("config protocol " + to_string(c.protocol) + " does not match subcommand " +
                      to_string(p));
  }
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  auto top = [&](const char* name) { return sub->get_parent()->count(name) > 0; };
  if (top("--seed")) c.seed = g.seed;
  if (top("--trials")) c.trials = g.trials;
  if (given("--experiment")) c.experiment = f.experiment;
  if (given("--n")) c.n = f.n;
  if (given("--rounds")) c.rounds = f.rounds;
  if (given("--alpha")) c.alpha = f.alpha;
  if (given("--k")) c.params.k = f.k;
  if (given("--l")) c.params.l = f.l;
  if (given("--adversary-json")) {
    c.adversary = StrategySpec::from_json(nlohmann::json::parse(f.adversary_json));
  }
  if (given("--adversary")) c.adversary.kind = strategy_from_string(f.adversary);
  if (given("--beta")) c.adversary.beta = f.beta;
  if (given("--archive")) c.archive = f.archive;
  if (p == Protocol::consensus) {
    if (given("--init")) c.init = parse_init_flag(f.init);
    if (given("--rule")) c.rule = rule_from_string(f.rule);
  } else if (given("--sigma")) {
    c.sigma = f.sigma;
  }
  if (p == Protocol::smr && given("--inject-schedule")) {
    std::ifstream in(f.schedule);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("injection schedule is not valid JSON: " + std::string(e.what()));
    }
    c.schedule = injections_from_json(j);
  }
  if (p == Protocol::commit || p == Protocol::recover) {
    if (given("--T")) c.T = f.T;
    if (given("--clients") || given("--commands")) {
      ClientPoolConfig pool = c.clients.value_or(
          p == Protocol::commit ? ClientPoolConfig{} : ClientPoolConfig{20, 1000, 5, 0});
      if (given("--clients")) pool.clients = f.clients;
      if (given("--commands")) pool.commands_per_client = f.commands;
      c.clients = pool;
    }
  }
  if (p == Protocol::commit && given("--certs")) c.check_certificates = f.certs;
  c.validate();
  return c;
}

int do_run(const RunConfig& c, const Globals& g, CLI::App* app) {
  const std::string out_flag = app->count("--out") ? g.out : c.out;
  const RunResult r = run_experiment(c, resolve_out_dir(out_flag), g.threads);
  std::cout << "wrote " << r.dir.string() << "\n";
  for (const auto& f : r.forensic_dumps) std::cerr << "monotonicity violation, forensic dump: " << f.string() << "\n";
  if (r.violations) {
    std::cerr << r.violations << " audit violations\n";
    return 1;
  }
  return 0;
}

int do_curves(double step, const Globals& g, CLI::App* app) {
  if (step <= 0.0 || step > 1.0) throw ConfigError("step must lie in (0, 1]");
  const auto steps = static_cast<std::uint64_t>(std::llround(1.0 / step));
  const auto dir = resolve_out_dir(app->count("--out") ? g.out : "out") / "curves";
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "curves.csv");
  csv << "x,f,g,g_avail,g_block\n" << std::setprecision(17);
  for (std::uint64_t i = 0; i <= steps; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(steps);
    csv << x;
    for (Curve c : {Curve::f, Curve::g, Curve::g_avail, Curve::g_block}) csv << "," << curve_value(c, x);
    csv << "\n";
  }
  nlohmann::json scans;
  struct Claim {
    Curve c;
    Rational lo, hi;
    SignClaim sign;
  };
  for (const Claim& cl : {Claim{Curve::g, 0, 1, SignClaim::nonpositive},
                          Claim{Curve::g_avail, Rational(1, 2), Rational(3, 4), SignClaim::nonnegative},
                          Claim{Curve::g_block, 0, 1, SignClaim::nonpositive}}) {
    const SignScan s = sign_scan(curve_poly(cl.c), cl.lo, cl.hi, steps, cl.sign);
    scans[to_string(cl.c)] = {{"claim", cl.sign == SignClaim::nonpositive ? "<= 0" : ">= 0"},
                              {"from", static_cast<double>(cl.lo)},
                              {"to", static_cast<double>(cl.hi)},
                              {"grid_points", s.grid_points},
                              {"violations", s.violations},
                              {"extreme", static_cast<double>(s.extreme)},
                              {"extreme_at", static_cast<double>(s.extreme_x)},
                              {"certified", s.certified}};
  }
  std::ofstream(dir / "scans.json") << scans.dump(2) << "\n";
  std::cout << "wrote " << (dir / "curves.csv").string() << " and " << (dir / "scans.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"median-rule gossip consensus and SMR simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--trials", g.trials, "number of trials");
  app.add_option("--out", g.out, "output root (MEDIAN_SMR_OUT overrides)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

  RunFlags cf, sf, mf, rf;
  auto* consensus = app.add_subcommand("consensus", "median / priority / gossip value rules");
  auto* smr = app.add_subcommand("smr", "extended median rule logs");
  auto* commit = app.add_subcommand("commit", "compact median rule with commitment");
  auto* recover = app.add_subcommand("recover", "recovery protocol with checkpoints");
  add_run_flags(consensus, cf, Protocol::consensus);
  add_run_flags(smr, sf, Protocol::smr);
  add_run_flags(commit, mf, Protocol::commit);
  add_run_flags(recover, rf, Protocol::recover);

  double step = 1e-4;
  auto* curves = app.add_subcommand("curves", "drift curve data and sign scans");
  curves->add_option("--step", step, "grid step");

  std::string suite = "all";
  std::string config_dir = MSMR_ACCEPTANCE_DIR;
  bool json_only = false;
  auto* accept = app.add_subcommand("accept", "acceptance suite");
  accept->add_option("--suite", suite, "curves | consensus | gossip | smr | commit | certs | recovery | all | A<i>");
  accept->add_option("--config-dir", config_dir, "directory of pinned criterion configs");
  accept->add_flag("--json", json_only, "print only the JSON verdicts");

  std::string archive;
  std::size_t trial = 0;
  auto* replay = app.add_subcommand("replay", "re-run a trial and compare with its snapshot archive");
  replay->add_option("--archive", archive, "snapshots_<trial>.ndjson")->required();
  replay->add_option("--trial", trial, "trial index");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*consensus) return do_run(build_config(consensus, g, cf, Protocol::consensus), g, &app);
    if (*smr) return do_run(build_config(smr, g, sf, Protocol::smr), g, &app);
    if (*commit) return do_run(build_config(commit, g, mf, Protocol::commit), g, &app);
    if (*recover) return do_run(build_config(recover, g, rf, Protocol::recover), g, &app);
    if (*curves) return do_curves(step, g, &app);
    if (*accept) {
      AcceptOptions o;
      o.config_dir = config_dir;
      if (app.count("--seed")) o.seed = g.seed;
      if (app.count("--trials")) o.trials = g.trials;
      o.threads = g.threads;
      o.golden = MSMR_GOLDEN_FILE;
      if (!o.golden.empty() && !std::filesystem::exists(o.golden)) o.golden.clear();
      o.progress = json_only ? nullptr : &std::cerr;
      const auto verdicts = run_acceptance(suite_criteria(suite), o);
      nlohmann::json j = nlohmann::json::array();
      bool ok = true;
      for (const auto& v : verdicts) {
        if (!json_only) std::cout << v.line() << "\n";
        j.push_back(v.to_json());
        ok = ok && v.pass();
      }
      const auto dir = resolve_out_dir(app.count("--out") ? g.out : "out") / "accept" /
                       (o.seed ? std::to_string(*o.seed) : std::string("pinned"));
      std::filesystem::create_directories(dir);
      std::ofstream(dir / ("verdicts_" + suite + ".json")) << j.dump(2) << "\n";
      if (json_only) std::cout << j.dump(2) << "\n";
      return ok ? 0 : 1;
    }
    if (*replay) {
      if (g.config.empty()) throw ConfigError("replay needs --config");
      RunConfig c = load_run_config(g.config);
      if (app.count("--seed")) c.seed = g.seed;
      const ReplayResult r = replay_archive(c, trial, archive);
      if (r.first_mismatch) {
        std::cout << "mismatch at round " << *r.first_mismatch << " after " << r.rounds_compared
                  << " identical snapshots\n";
        return 1;
      }
      std::cout << "identical: " << r.rounds_compared << " snapshots\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
