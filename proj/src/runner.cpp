#include "msmr/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "msmr/rng.hpp"

namespace msmr {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::vector<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown " + where + " key: " + key);
    }
  }
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "unanimous") return InitMode::unanimous;
  if (s == "binary") return InitMode::binary;
  if (s == "fraction-useful") return InitMode::fraction_useful;
  if (s == "keys") return InitMode::keys;
  if (s == "planted") return InitMode::planted;
  throw ConfigError("unknown init mode: " + s);
}

json init_to_json(const InitSpec& s) {
  json j;
  j["mode"] = to_string(s.mode);
  switch (s.mode) {
    case InitMode::unanimous: j["value"] = s.unanimous_value; break;
    case InitMode::binary: break;
    case InitMode::fraction_useful: j["fraction"] = s.fraction; break;
    case InitMode::planted: j["planted"] = s.planted; break;
    case InitMode::keys: {
      auto& arr = j["keys"] = json::array();
      for (const auto& v : s.keys) arr.push_back(v ? json(*v) : json(nullptr));
      break;
    }
  }
  return j;
}

InitSpec init_from_json(const json& j) {
  reject_unknown(j, {"mode", "value", "fraction", "planted", "keys"}, "init");
  InitSpec s;
  s.mode = init_mode_from_string(field<std::string>(j, "mode", "unanimous"));
  s.unanimous_value = field<Key>(j, "value", s.unanimous_value);
  s.fraction = field<double>(j, "fraction", s.fraction);
  s.planted = field<std::size_t>(j, "planted", s.planted);
  if (j.contains("keys")) {
    for (const auto& v : j.at("keys")) {
      if (v.is_null()) {
        s.keys.emplace_back(std::nullopt);
      } else if (v.is_number_unsigned()) {
        s.keys.emplace_back(v.get<Key>());
      } else {
        throw ConfigError("init keys must be unsigned integers or null");
      }
    }
  }
  return s;
}

json opt(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

std::int64_t cell(const std::optional<std::uint64_t>& v) {
  return v ? static_cast<std::int64_t>(*v) : -1;
}

Trace smr_commands(const SmrReport& r) {
  Trace t{{"client", "seq", "injected_round", "broadcast_round", "stable_round"}, {}};
  for (const auto& o : r.outcomes) {
    t.rows.push_back({static_cast<std::int64_t>(o.cmd.client), static_cast<std::int64_t>(o.cmd.seq),
                      cell(o.injected_round), cell(o.broadcast_round), cell(o.stable_round)});
  }
  return t;
}

Trace client_commands(const std::vector<CommandRecord>& commands) {
  Trace t{{"client", "seq", "injected_round", "commit_round", "acked_round"}, {}};
  for (const auto& c : commands) {
    t.rows.push_back({static_cast<std::int64_t>(c.cmd.client), static_cast<std::int64_t>(c.cmd.seq),
                      cell(c.injected_round), cell(c.commit_round), cell(c.acked_round)});
  }
  return t;
}

std::vector<Value> read_keys_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open keys file " + path);
  std::vector<Value> keys;
  std::string tok;
  while (in >> tok) {
    if (tok == "-") {
      keys.emplace_back(std::nullopt);
      continue;
    }
    std::size_t used = 0;
    Key k = 0;
    try {
      k = std::stoull(tok, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || tok[0] == '-') {
      throw ConfigError("keys file " + path + ": bad entry '" + tok + "'");
    }
    keys.emplace_back(k);
  }
  return keys;
}

Trace consensus_trace(const ConsensusReport& r) {
  Trace t{{"round", "useful_count", "distinct_values", "agreed", "holders", "broadcast_holders"}, {}};
  for (const auto& row : r.series) {
    t.rows.push_back({static_cast<std::int64_t>(row.round), static_cast<std::int64_t>(row.useful_count),
                      static_cast<std::int64_t>(row.distinct_values), row.agreed ? 1 : 0,
                      static_cast<std::int64_t>(row.holders),
                      static_cast<std::int64_t>(row.broadcast_holders)});
  }
  return t;
}

Trace smr_trace(const SmrReport& r) {
  Trace t{{"round", "useful_count", "distinct_logs", "max_log_length"}, {}};
  for (const auto& row : r.series) {
    t.rows.push_back({static_cast<std::int64_t>(row.round), static_cast<std::int64_t>(row.useful_count),
                      static_cast<std::int64_t>(row.distinct_logs),
                      static_cast<std::int64_t>(row.max_log_length)});
  }
  return t;
}

Trace commit_trace(const CommitReport& r) {
  Trace t{{"round", "useful_count", "committed_count", "distinct_digests"}, {}};
  for (const auto& row : r.series) {
    t.rows.push_back({static_cast<std::int64_t>(row.round), static_cast<std::int64_t>(row.useful_count),
                      static_cast<std::int64_t>(row.committed_count),
                      static_cast<std::int64_t>(row.distinct_digests)});
  }
  return t;
}

Trace recovery_trace(const RecoveryReport& r) {
  Trace t{{"round", "r_live", "l_live", "committed_count", "max_W"}, {}};
  for (const auto& row : r.series) {
    t.rows.push_back({static_cast<std::int64_t>(row.round), static_cast<std::int64_t>(row.r_live),
                      static_cast<std::int64_t>(row.l_live),
                      static_cast<std::int64_t>(row.committed_count),
                      static_cast<std::int64_t>(row.max_W)});
  }
  return t;
}

json command_latencies(const std::vector<CommandRecord>& commands) {
  std::uint64_t committed = 0, acked = 0, max_latency = 0;
  for (const auto& c : commands) {
    if (c.acked_round) ++acked;
    if (c.commit_round && c.injected_round) {
      ++committed;
      max_latency = std::max(max_latency, *c.commit_round - *c.injected_round);
    }
  }
  return json{{"commands", commands.size()},
              {"committed", committed},
              {"acked", acked},
              {"max_commit_latency", max_latency}};
}

}  // namespace

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::consensus: return "consensus";
    case Protocol::smr: return "smr";
    case Protocol::commit: return "commit";
    case Protocol::recover: return "recover";
  }
  return "consensus";
}

Protocol protocol_from_string(const std::string& name) {
  if (name == "consensus") return Protocol::consensus;
  if (name == "smr") return Protocol::smr;
  if (name == "commit") return Protocol::commit;
  if (name == "recover") return Protocol::recover;
  throw ConfigError("unknown protocol: " + name);
}

std::string to_string(ValueRule r) {
  switch (r) {
    case ValueRule::median: return "median";
    case ValueRule::priority: return "priority";
    case ValueRule::gossip: return "gossip";
  }
  return "median";
}

ValueRule rule_from_string(const std::string& name) {
  if (name == "median") return ValueRule::median;
  if (name == "priority") return ValueRule::priority;
  if (name == "gossip") return ValueRule::gossip;
  throw ConfigError("unknown value rule: " + name);
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::unanimous: return "unanimous";
    case InitMode::binary: return "binary";
    case InitMode::fraction_useful: return "fraction-useful";
    case InitMode::keys: return "keys";
    case InitMode::planted: return "planted";
  }
  return "unanimous";
}

InitSpec parse_init_flag(const std::string& flag) {
  const auto eq = flag.find('=');
  const std::string name = flag.substr(0, eq);
  const std::string arg = eq == std::string::npos ? "" : flag.substr(eq + 1);
  InitSpec s;
  s.mode = init_mode_from_string(name);
  try {
    switch (s.mode) {
      case InitMode::unanimous:
        if (!arg.empty()) s.unanimous_value = std::stoull(arg);
        break;
      case InitMode::fraction_useful: s.fraction = std::stod(arg); break;
      case InitMode::planted: s.planted = std::stoull(arg); break;
      case InitMode::binary: break;
      case InitMode::keys:
        if (arg.empty()) throw ConfigError("keys init needs a file: keys=FILE");
        s.keys = read_keys_file(arg);
        break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::logic_error&) {
    throw ConfigError("bad init argument: " + flag);
  }
  return s;
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"experiment", "protocol", "n", "seed", "trials", "rounds", "alpha", "k", "l",
                  "rule", "init", "adversary", "stop_on_agreement", "sigma", "T", "c_t", "epsilon",
                  "injections", "schedule", "clients", "tail_rounds", "check_certificates", "cert_servers",
                  "mutations", "surge_end", "archive", "out"},
                 "config");
  RunConfig c;
  c.experiment = field<std::string>(j, "experiment", c.experiment);
  c.protocol = protocol_from_string(field<std::string>(j, "protocol", "consensus"));
  c.n = field<std::size_t>(j, "n", c.n);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  c.trials = field<std::size_t>(j, "trials", c.trials);
  c.rounds = field<std::uint64_t>(j, "rounds", c.rounds);
  c.alpha = field<std::uint64_t>(j, "alpha", c.alpha);
  c.params.k = field<std::size_t>(j, "k", c.params.k);
  c.params.l = field<std::size_t>(j, "l", c.params.l);
  c.rule = rule_from_string(field<std::string>(j, "rule", "median"));
  if (j.contains("init")) c.init = init_from_json(j.at("init"));
  if (j.contains("adversary")) c.adversary = StrategySpec::from_json(j.at("adversary"));
  c.stop_on_agreement = field<bool>(j, "stop_on_agreement", c.stop_on_agreement);
  c.sigma = field<double>(j, "sigma", c.sigma);
  c.T = field<std::uint64_t>(j, "T", c.T);
  c.c_t = field<double>(j, "c_t", c.c_t);
  c.epsilon = field<double>(j, "epsilon", c.epsilon);
  if (j.contains("injections")) {
    const json& ij = j.at("injections");
    reject_unknown(ij, {"clients", "per_client", "stagger", "spacing"}, "injections");
    c.injections.clients = field<std::size_t>(ij, "clients", c.injections.clients);
    c.injections.per_client = field<std::size_t>(ij, "per_client", c.injections.per_client);
    c.injections.stagger = field<std::uint64_t>(ij, "stagger", c.injections.stagger);
    c.injections.spacing = field<std::uint64_t>(ij, "spacing", c.injections.spacing);
  }
  if (j.contains("schedule")) c.schedule = injections_from_json(j.at("schedule"));
  if (j.contains("clients")) {
    const json& cj = j.at("clients");
    reject_unknown(cj, {"clients", "commands_per_client", "stagger", "equivocating"}, "clients");
    ClientPoolConfig p;
    p.clients = field<std::size_t>(cj, "clients", p.clients);
    p.commands_per_client = field<std::size_t>(cj, "commands_per_client", p.commands_per_client);
    p.stagger = field<std::uint64_t>(cj, "stagger", p.stagger);
    p.equivocating = field<std::size_t>(cj, "equivocating", p.equivocating);
    c.clients = p;
  }
  c.tail_rounds = field<std::uint64_t>(j, "tail_rounds", c.tail_rounds);
  c.check_certificates = field<bool>(j, "check_certificates", c.check_certificates);
  c.cert_servers = field<std::size_t>(j, "cert_servers", c.cert_servers);
  c.mutations = field<std::size_t>(j, "mutations", c.mutations);
  c.surge_end = field<std::uint64_t>(j, "surge_end", c.surge_end);
  c.archive = field<bool>(j, "archive", c.archive);
  c.out = field<std::string>(j, "out", c.out);
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["protocol"] = to_string(protocol);
  j["n"] = n;
  j["seed"] = seed;
  j["trials"] = trials;
  j["rounds"] = rounds;
  j["alpha"] = alpha;
  j["k"] = params.k;
  j["l"] = params.l;
  j["rule"] = to_string(rule);
  j["init"] = init_to_json(init);
  j["adversary"] = adversary.to_json();
  j["stop_on_agreement"] = stop_on_agreement;
  j["sigma"] = sigma;
  j["T"] = T;
  j["c_t"] = c_t;
  j["epsilon"] = epsilon;
  j["injections"] = json{{"clients", injections.clients},
                         {"per_client", injections.per_client},
                         {"stagger", injections.stagger},
                         {"spacing", injections.spacing}};
  if (!schedule.empty()) j["schedule"] = injections_to_json(schedule);
  if (clients) {
    j["clients"] = json{{"clients", clients->clients},
                        {"commands_per_client", clients->commands_per_client},
                        {"stagger", clients->stagger},
                        {"equivocating", clients->equivocating}};
  }
  j["tail_rounds"] = tail_rounds;
  j["check_certificates"] = check_certificates;
  j["cert_servers"] = cert_servers;
  j["mutations"] = mutations;
  j["surge_end"] = surge_end;
  j["archive"] = archive;
  j["out"] = out;
  return j;
}

void RunConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  params.validate();
  adversary.validate();
  if (sigma <= 0.0) throw ConfigError("sigma must be > 0");
  if (epsilon < 0.0 || epsilon >= 1.0) throw ConfigError("epsilon must lie in [0, 1)");
  if (init.mode == InitMode::fraction_useful && (init.fraction < 0.0 || init.fraction > 1.0)) {
    throw ConfigError("init fraction must lie in [0, 1]");
  }
  if (init.mode == InitMode::keys && init.keys.size() != n) {
    throw ConfigError("init keys must list exactly n values");
  }
  if (init.mode == InitMode::planted && init.planted > n) {
    throw ConfigError("planted count exceeds n");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

std::vector<Injection> injections_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("injection schedule must be an array");
  std::vector<Injection> out;
  for (const auto& e : j) {
    reject_unknown(e, {"round", "client", "seq", "payload"}, "schedule entry");
    Injection inj;
    inj.round = field<std::uint64_t>(e, "round", 1);
    inj.cmd.client = field<std::uint64_t>(e, "client", 0);
    inj.cmd.seq = field<std::uint64_t>(e, "seq", 0);
    inj.cmd.payload = field<std::string>(e, "payload", "");
    if (inj.round < 1) throw ConfigError("schedule rounds start at 1");
    if (inj.cmd.client < 1 || inj.cmd.seq < 1) throw ConfigError("schedule client and seq must be >= 1");
    if (inj.cmd.payload.empty()) {
      inj.cmd.payload = "c" + std::to_string(inj.cmd.client) + "-" + std::to_string(inj.cmd.seq);
    }
    out.push_back(std::move(inj));
  }
  return out;
}

json injections_to_json(const std::vector<Injection>& v) {
  json arr = json::array();
  for (const auto& inj : v) {
    arr.push_back(json{{"round", inj.round},
                       {"client", inj.cmd.client},
                       {"seq", inj.cmd.seq},
                       {"payload", inj.cmd.payload}});
  }
  return arr;
}

ConsensusConfig consensus_config(const RunConfig& cfg, std::size_t trial) {
  ConsensusConfig c;
  c.n = cfg.n;
  c.params = cfg.params;
  c.rule = cfg.rule;
  c.init = cfg.init;
  c.adversary = cfg.adversary;
  c.alpha = cfg.alpha;
  c.seed = trial_seed(cfg.seed, trial);
  if (cfg.rounds) c.rounds = cfg.rounds;
  c.stop_on_agreement = cfg.stop_on_agreement;
  c.archive = cfg.archive;
  return c;
}

SmrConfig smr_config(const RunConfig& cfg, std::size_t trial) {
  SmrConfig c;
  c.n = cfg.n;
  c.params = cfg.params;
  c.sigma = cfg.sigma;
  c.adversary = cfg.adversary;
  c.alpha = cfg.alpha;
  c.seed = trial_seed(cfg.seed, trial);
  if (cfg.rounds) c.rounds = cfg.rounds;
  c.injections = cfg.schedule.empty()
                     ? staggered_injections(cfg.injections.clients, cfg.injections.per_client,
                                            cfg.injections.stagger, cfg.injections.spacing)
                     : cfg.schedule;
  c.archive = cfg.archive;
  return c;
}

CommitConfig commit_config(const RunConfig& cfg, std::size_t trial) {
  CommitConfig c;
  c.n = cfg.n;
  c.params = cfg.params;
  c.sigma = cfg.sigma;
  c.c_t = cfg.c_t;
  c.T = cfg.T;
  c.adversary = cfg.adversary;
  c.alpha = cfg.alpha;
  c.seed = trial_seed(cfg.seed, trial);
  c.max_rounds = cfg.rounds;
  c.tail_rounds = cfg.tail_rounds;
  if (cfg.clients) c.clients = *cfg.clients;
  c.check_certificates = cfg.check_certificates;
  c.cert_servers = cfg.cert_servers;
  c.mutations = cfg.mutations;
  c.archive = cfg.archive;
  return c;
}

RecoveryConfig recovery_config(const RunConfig& cfg, std::size_t trial) {
  RecoveryConfig c;
  c.n = cfg.n;
  c.params = cfg.params;
  c.sigma = cfg.sigma;
  c.c_budget = cfg.c_t;
  c.T = cfg.T;
  c.epsilon = cfg.epsilon;
  c.adversary = cfg.adversary;
  c.alpha = cfg.alpha;
  c.seed = trial_seed(cfg.seed, trial);
  c.rounds = cfg.rounds;
  c.surge_end = cfg.surge_end;
  if (cfg.clients) c.clients = *cfg.clients;
  c.archive = cfg.archive;
  return c;
}

TrialOutput run_trial(const RunConfig& cfg, std::size_t trial) {
  TrialOutput out;
  out.trial = trial;
  out.seed = trial_seed(cfg.seed, trial);
  json& s = out.summary;
  s["trial"] = trial;
  s["seed"] = out.seed;
  switch (cfg.protocol) {
    case Protocol::consensus: {
      ConsensusReport r = run_consensus(consensus_config(cfg, trial));
      out.series = consensus_trace(r);
      out.violations = r.validity_violations;
      s["rounds_run"] = r.rounds_run;
      s["agreement_round"] = opt(r.agreement_round);
      s["all_bottom_round"] = opt(r.all_bottom_round);
      s["agreed_value"] = opt(r.agreed_value);
      s["broadcast_complete_round"] = opt(r.broadcast_complete_round);
      s["broadcast_extinct_round"] = opt(r.broadcast_extinct_round);
      s["validity_violations"] = r.validity_violations;
      out.archive = std::move(r.archive);
      break;
    }
    case Protocol::smr: {
      SmrReport r = run_smr(smr_config(cfg, trial));
      out.series = smr_trace(r);
      out.commands = smr_commands(r);
      out.violations = r.validity_violations + r.repetition_violations + r.shrinkage_violations;
      std::uint64_t broadcast = 0, stable = 0, max_latency = 0;
      for (const auto& o : r.outcomes) {
        if (o.stable_round) ++stable;
        if (o.broadcast_round && o.injected_round) {
          ++broadcast;
          max_latency = std::max(max_latency, *o.broadcast_round - *o.injected_round);
        }
      }
      s["rounds_run"] = r.rounds_run;
      s["commands"] = r.outcomes.size();
      s["broadcast"] = broadcast;
      s["stable"] = stable;
      s["max_broadcast_latency"] = max_latency;
      s["validity_violations"] = r.validity_violations;
      s["repetition_violations"] = r.repetition_violations;
      s["shrinkage_violations"] = r.shrinkage_violations;
      out.archive = std::move(r.archive);
      break;
    }
    case Protocol::commit: {
      CommitReport r = run_commit(commit_config(cfg, trial));
      out.series = commit_trace(r);
      out.commands = client_commands(r.commands);
      out.violations = r.safety_violations + r.validity_violations + r.repetition_violations +
                       r.shrinkage_violations + r.conflicting_commits + r.certs.storage_violations +
                       (r.certs.checked - r.certs.accepted) + r.certs.mutations_accepted;
      s["T"] = r.T;
      s["rounds_run"] = r.rounds_run;
      s["all_acked"] = r.all_acked;
      s["latency"] = command_latencies(r.commands);
      s["safety_violations"] = r.safety_violations;
      s["validity_violations"] = r.validity_violations;
      s["repetition_violations"] = r.repetition_violations;
      s["shrinkage_violations"] = r.shrinkage_violations;
      s["conflicting_commits"] = r.conflicting_commits;
      s["catch_up_events"] = r.catch_up_events;
      s["certificates"] = json{{"checkpoints", r.certs.checkpoints},
                               {"checked", r.certs.checked},
                               {"accepted", r.certs.accepted},
                               {"mutations", r.certs.mutations},
                               {"mutations_accepted", r.certs.mutations_accepted},
                               {"storage_violations", r.certs.storage_violations}};
      out.archive = std::move(r.archive);
      break;
    }
    case Protocol::recover: {
      RecoveryReport r = run_recovery(recovery_config(cfg, trial));
      out.series = recovery_trace(r);
      out.commands = client_commands(r.commands);
      out.violations = r.monotonicity_violations + r.checkpoint_conflicts +
                       r.mutual_exclusion_violations + r.causality_violations +
                       r.bottom_invariant_violations + r.safety_violations;
      out.forensic = r.forensic;
      std::uint64_t good = 0, happy = 0;
      for (const auto& w : r.windows) {
        good += w.good;
        happy += w.happy;
      }
      s["T"] = r.T;
      s["t_d"] = r.t_d;
      s["rounds_run"] = r.rounds_run;
      s["aborted"] = r.aborted;
      s["surge_end"] = r.surge_end;
      s["recovered_round"] = opt(r.recovered_round);
      s["post_surge_commit_round"] = opt(r.post_surge_commit_round);
      s["windows"] = r.windows.size();
      s["good_windows"] = good;
      s["happy_windows"] = happy;
      s["latency"] = command_latencies(r.commands);
      s["monotonicity_violations"] = r.monotonicity_violations;
      s["checkpoint_conflicts"] = r.checkpoint_conflicts;
      s["mutual_exclusion_violations"] = r.mutual_exclusion_violations;
      s["causality_violations"] = r.causality_violations;
      s["bottom_invariant_violations"] = r.bottom_invariant_violations;
      s["safety_violations"] = r.safety_violations;
      out.archive = std::move(r.archive);
      break;
    }
  }
  s["violations"] = out.violations;
  return out;
}

std::size_t default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::filesystem::path resolve_out_dir(const std::string& flag) {
  if (const char* env = std::getenv("MEDIAN_SMR_OUT"); env && *env) return env;
  return flag;
}

RunResult run_experiment(const RunConfig& cfg, const std::filesystem::path& out_root,
                         std::size_t threads) {
  cfg.validate();
  RunResult result;
  result.dir = out_root / cfg.experiment / std::to_string(cfg.seed);
  std::filesystem::create_directories(result.dir);

  auto trials = parallel_trials(cfg.trials, threads,
                                [&](std::size_t t) { return run_trial(cfg, t); });

  std::ofstream metrics(result.dir / "metrics.csv");
  std::ofstream commands;
  if (cfg.protocol != Protocol::consensus) commands.open(result.dir / "commands.csv");
  bool header = false;
  json summary;
  summary["schema_version"] = 1;
  summary["experiment"] = cfg.experiment;
  summary["protocol"] = to_string(cfg.protocol);
  summary["seed"] = cfg.seed;
  summary["trials"] = cfg.trials;
  auto& per_trial = summary["trial_results"] = json::array();
  for (auto& t : trials) {
    if (!header) {
      metrics << "trial";
      for (const auto& c : t.series.columns) metrics << "," << c;
      metrics << "\n";
      if (commands.is_open()) {
        commands << "trial";
        for (const auto& c : t.commands.columns) commands << "," << c;
        commands << "\n";
      }
      header = true;
    }
    if (commands.is_open()) {
      for (const auto& row : t.commands.rows) {
        commands << t.trial;
        for (auto v : row) commands << "," << v;
        commands << "\n";
      }
    }
    for (const auto& row : t.series.rows) {
      metrics << t.trial;
      for (auto v : row) metrics << "," << v;
      metrics << "\n";
    }
    result.violations += t.violations;
    if (!t.forensic.empty()) {
      const auto path = result.dir / ("forensic_" + std::to_string(t.trial) + ".txt");
      std::ofstream(path) << t.forensic << "\n";
      result.forensic_dumps.push_back(path);
    }
    if (cfg.archive) {
      std::ofstream arch(result.dir / ("snapshots_" + std::to_string(t.trial) + ".ndjson"));
      for (const auto& snap : t.archive) arch << snap.to_json_line() << "\n";
    }
    per_trial.push_back(t.summary);
  }
  summary["violations"] = result.violations;
  std::ofstream(result.dir / "summary.json") << summary.dump(2) << "\n";
  std::ofstream(result.dir / "config.echo.json") << cfg.to_json().dump(2) << "\n";
  return result;
}

ReplayResult replay_archive(const RunConfig& cfg, std::size_t trial,
                            const std::filesystem::path& archive) {
  std::ifstream in(archive);
  if (!in) throw ConfigError("cannot open archive " + archive.string());
  RunConfig copy = cfg;
  copy.archive = true;
  TrialOutput t = run_trial(copy, trial);
  ReplayResult r;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= t.archive.size() || t.archive[i].to_json_line() != line) {
      r.first_mismatch = i < t.archive.size() ? t.archive[i].round.value : i + 1;
      return r;
    }
    ++i;
    ++r.rounds_compared;
  }
  if (i != t.archive.size()) r.first_mismatch = i < t.archive.size() ? t.archive[i].round.value : i + 1;
  return r;
}

}  // namespace msmr
