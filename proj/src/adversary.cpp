#include "msmr/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msmr/rng.hpp"

namespace msmr {

namespace {

void check_beta(double beta) {
  if (!(beta >= 0.0) || beta > 1.0) {
    throw ConfigError("adversary beta must lie in [0, 1], got " + std::to_string(beta));
  }
}

std::vector<ServerId> random_set(std::size_t n, std::size_t count, RngStream& rng) {
  count = std::min(count, n);
  std::vector<std::size_t> idx;
  choose_subset(rng, n, count, idx);
  std::vector<ServerId> out;
  out.reserve(count);
  for (std::size_t i : idx) out.push_back(ServerId::from_index(i));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ServerId> range_set(std::size_t first, std::size_t last) {
  std::vector<ServerId> out;
  for (std::size_t i = first; i < last; ++i) out.push_back(ServerId::from_index(i));
  return out;
}

const Phase* active_phase(const std::vector<Phase>& schedule, std::uint64_t r) {
  for (const auto& p : schedule) {
    if (r >= p.from_round && r <= p.to_round) return &p;
  }
  return nullptr;
}

}  // namespace

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::none: return "none";
    case StrategyKind::uniform_random: return "uniform-random";
    case StrategyKind::sticky: return "sticky";
    case StrategyKind::target_useful: return "target-useful";
    case StrategyKind::permanent_set: return "permanent-set";
    case StrategyKind::surge_schedule: return "surge-schedule";
    case StrategyKind::partition: return "partition";
  }
  return "none";
}

StrategyKind strategy_from_string(const std::string& name) {
  for (auto k : {StrategyKind::none, StrategyKind::uniform_random, StrategyKind::sticky,
                 StrategyKind::target_useful, StrategyKind::permanent_set,
                 StrategyKind::surge_schedule, StrategyKind::partition}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown adversary strategy: " + name);
}

bool StrategySpec::bounded() const noexcept {
  return kind == StrategyKind::uniform_random || kind == StrategyKind::sticky ||
         kind == StrategyKind::target_useful;
}

void StrategySpec::validate() const {
  check_beta(beta);
  if (set_fraction < 0.0 || set_fraction > 1.0) {
    throw ConfigError("permanent-set fraction must lie in [0, 1]");
  }
  if (split <= 0.0 || split >= 1.0) throw ConfigError("partition split must lie in (0, 1)");
  if (kind == StrategyKind::sticky && period == 0) throw ConfigError("sticky period must be > 0");
  std::vector<Phase> sorted = schedule;
  for (const auto& p : sorted) {
    check_beta(p.beta);
    if (p.from_round < 1 || p.to_round < p.from_round) {
      throw ConfigError("schedule phase must satisfy 1 <= from_round <= to_round");
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Phase& a, const Phase& b) { return a.from_round < b.from_round; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].from_round <= sorted[i - 1].to_round) {
      throw ConfigError("schedule phases overlap");
    }
  }
}

StrategySpec StrategySpec::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"name", "beta", "size", "fraction", "period",
                                                 "schedule", "split", "mode"};
  if (!j.is_object()) throw ConfigError("adversary must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown adversary key: " + key);
    }
  }
  StrategySpec s;
  s.kind = strategy_from_string(j.value("name", std::string("none")));
  s.beta = j.value("beta", 0.0);
  s.set_size = j.value("size", std::size_t{0});
  s.set_fraction = j.value("fraction", 0.0);
  s.period = j.value("period", std::uint64_t{10});
  s.split = j.value("split", 0.5);
  const std::string mode = j.value("mode", std::string("smaller"));
  if (mode == "smaller") {
    s.mode = PartitionMode::smaller;
  } else if (mode == "alternate") {
    s.mode = PartitionMode::alternate;
  } else {
    throw ConfigError("unknown partition mode: " + mode);
  }
  if (j.contains("schedule")) {
    for (const auto& p : j.at("schedule")) {
      for (const auto& [key, _] : p.items()) {
        if (key != "from_round" && key != "to_round" && key != "beta") {
          throw ConfigError("unknown schedule key: " + key);
        }
      }
      s.schedule.push_back(Phase{p.at("from_round").get<std::uint64_t>(),
                                 p.at("to_round").get<std::uint64_t>(), p.value("beta", 1.0)});
    }
  }
  s.validate();
  return s;
}

nlohmann::json StrategySpec::to_json() const {
  nlohmann::json j;
  j["name"] = to_string(kind);
  j["beta"] = beta;
  if (kind == StrategyKind::permanent_set) {
    j["size"] = set_size;
    j["fraction"] = set_fraction;
  }
  if (kind == StrategyKind::sticky) j["period"] = period;
  if (kind == StrategyKind::partition) {
    j["split"] = split;
    j["mode"] = mode == PartitionMode::smaller ? "smaller" : "alternate";
  }
  if (!schedule.empty()) {
    auto& arr = j["schedule"] = nlohmann::json::array();
    for (const auto& p : schedule) {
      arr.push_back({{"from_round", p.from_round}, {"to_round", p.to_round}, {"beta", p.beta}});
    }
  }
  return j;
}

BlockDecision choose_blocked(const StrategySpec& spec, const WorldSnapshot& lagged,
                             std::size_t n, RoundIndex round,
                             std::uint64_t adversary_seed) {
  BlockDecision d;
  d.round = round;
  const std::uint64_t r = round.value;
  RngStream rng(adversary_seed, Entity::adversary, 0, r, Purpose::block);

  switch (spec.kind) {
    case StrategyKind::none:
      break;
    case StrategyKind::uniform_random:
      d.blocked = random_set(n, blocking_budget(spec.beta, n), rng);
      break;
    case StrategyKind::sticky: {
      RngStream epoch(adversary_seed, Entity::adversary, 1, (r - 1) / spec.period,
                      Purpose::block);
      d.blocked = random_set(n, blocking_budget(spec.beta, n), epoch);
      break;
    }
    case StrategyKind::target_useful: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < lagged.servers.size() && i < n; ++i) {
        if (lagged.servers[i].holds_value) candidates.push_back(i);
      }
      std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return lagged.servers[a].last_useful > lagged.servers[b].last_useful;
      });
      candidates.resize(std::min(candidates.size(), blocking_budget(spec.beta, n)));
      for (std::size_t i : candidates) d.blocked.push_back(ServerId::from_index(i));
      std::sort(d.blocked.begin(), d.blocked.end());
      break;
    }
    case StrategyKind::permanent_set: {
      std::size_t size = spec.set_size;
      if (size == 0) {
        size = static_cast<std::size_t>(
            std::ceil(spec.set_fraction * static_cast<double>(n) - 1e-9));
      }
      d.blocked = range_set(0, std::min(size, n));
      break;
    }
    case StrategyKind::surge_schedule:
      if (const Phase* p = active_phase(spec.schedule, r)) {
        d.blocked = random_set(n, blocking_budget(p->beta, n), rng);
      }
      break;
    case StrategyKind::partition: {
      if (!spec.schedule.empty() && active_phase(spec.schedule, r) == nullptr) break;
      const std::size_t a = static_cast<std::size_t>(std::floor(spec.split * static_cast<double>(n)));
      bool block_a;
      if (spec.mode == PartitionMode::alternate) {
        block_a = (r % 2) == 1;
      } else {
        block_a = a < n - a;
      }
      d.blocked = block_a ? range_set(0, a) : range_set(a, n);
      break;
    }
  }
  return d;
}

}  // namespace msmr
