#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "error.hpp"

namespace rpt {

Interval bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed,
                           int resamples, double level) {
  if (values.empty()) throw UsageError("bootstrap of an empty sample");
  if (resamples <= 0 || !(level > 0.0 && level < 1.0)) {
    throw UsageError("bootstrap needs positive resamples and level in (0, 1)");
  }
  Interval out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());

  Rng rng(seed);
  std::vector<double> means(resamples);
  const auto n = values.size();
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.uniform_int(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  const auto lo = static_cast<std::size_t>(std::floor(tail * resamples));
  const auto hi = static_cast<std::size_t>(std::ceil((1.0 - tail) * resamples)) - 1;
  out.low = means[std::min(lo, means.size() - 1)];
  out.high = means[std::min(hi, means.size() - 1)];
  return out;
}

EvalEpisode play_episode(const std::vector<PolicyPtr>& team, const ArenaConfig& arena_cfg,
                         const SpawnConfig& spawn, std::uint64_t seed,
                         const std::function<void(const Arena&, const std::vector<int>&,
                                                  const StepResult&)>& on_step) {
  Arena arena(arena_cfg, seed);
  if (static_cast<int>(team.size()) != arena.team_size()) {
    throw UsageError("team has " + std::to_string(team.size()) + " policies, arena has " +
                     std::to_string(arena.team_size()) + " slots");
  }
  std::vector<Vector> obs = arena.reset(spawn);
  EvalEpisode ep;
  ep.spawn_config = spawn.id;
  std::vector<int> actions(team.size());
  while (!arena.episode_over()) {
    for (std::size_t i = 0; i < team.size(); ++i) actions[i] = team[i]->act(obs[i]);
    StepResult r = arena.step(actions);
    ep.episode_return += r.rewards[0];
    ep.length += 1;
    ep.captured = r.captured;
    if (on_step) on_step(arena, actions, r);
    obs = std::move(r.observations);
  }
  return ep;
}

namespace {

SlotSummary summarize(int slot, Role role, const std::vector<double>& returns,
                      int captures, std::uint64_t seed) {
  SlotSummary s;
  s.slot = slot;
  s.role = role;
  s.episodes = static_cast<int>(returns.size());
  s.episode_return = bootstrap_mean_ci(returns, seed);
  s.capture_rate = static_cast<double>(captures) / static_cast<double>(returns.size());
  return s;
}

}  // namespace

EvalReport evaluate_mixed_team(const std::string& target_name,
                               const std::vector<PolicyPtr>& target_by_slot,
                               const HeldoutPool& pool, const ArenaConfig& arena,
                               const std::vector<SpawnConfig>& configs, int repeats,
                               std::uint64_t seed) {
  const int slots = static_cast<int>(arena.team.size());
  const int obs_dim = Arena::observation_dim(slots);
  if (configs.empty()) throw UsageError("evaluation needs at least one spawn config");
  if (repeats <= 0) throw UsageError("evaluation repeats must be positive");
  if (static_cast<int>(target_by_slot.size()) != slots) {
    throw UsageError("target policy count does not match team size");
  }
  for (int s = 0; s < slots; ++s) {
    if (!target_by_slot[s]) throw UsageError("missing target policy for a slot");
    if (target_by_slot[s]->observation_dim() != obs_dim) {
      throw ShapeError("target policy for slot " + std::to_string(s) + " expects " +
                       std::to_string(target_by_slot[s]->observation_dim()) +
                       " observation entries, slot provides " + std::to_string(obs_dim));
    }
    auto it = pool.find(arena.team[s]);
    if (it == pool.end() || !it->second) {
      throw UsageError("held-out pool has no policy for role " +
                       std::string(role_name(arena.team[s])));
    }
    if (it->second->observation_dim() != obs_dim) {
      throw ShapeError("held-out " + std::string(role_name(arena.team[s])) +
                       " policy observation size does not match the arena");
    }
  }

  EvalReport report;
  report.target = target_name;
  std::vector<double> all_returns;
  int all_captures = 0;
  for (int s = 0; s < slots; ++s) {
    std::vector<PolicyPtr> team(slots);
    for (int k = 0; k < slots; ++k) {
      team[k] = k == s ? target_by_slot[s] : pool.at(arena.team[k]);
    }
    std::vector<double> returns;
    int captures = 0;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      for (int rep = 0; rep < repeats; ++rep) {
        EvalEpisode ep = play_episode(team, arena, configs[c],
                                      derive_seed(seed, static_cast<std::uint64_t>(s), c,
                                                  static_cast<std::uint64_t>(rep)));
        ep.target = target_name;
        ep.slot = s;
        ep.role = arena.team[s];
        ep.repeat = rep;
        returns.push_back(ep.episode_return);
        captures += ep.captured ? 1 : 0;
        report.episodes.push_back(std::move(ep));
      }
    }
    report.per_slot.push_back(
        summarize(s, arena.team[s], returns, captures, derive_seed(seed, 0xb007, s)));
    all_returns.insert(all_returns.end(), returns.begin(), returns.end());
    all_captures += captures;
  }
  report.episode_return = bootstrap_mean_ci(all_returns, derive_seed(seed, 0xb007, 0xa11));
  report.capture_rate =
      static_cast<double>(all_captures) / static_cast<double>(all_returns.size());
  return report;
}

std::vector<PolicyPtr> frozen_policies(const Trainer& trainer, Algo kind) {
  std::vector<PolicyPtr> out;
  for (int s = 0; s < static_cast<int>(trainer.slots().size()); ++s) {
    out.push_back(std::make_shared<FrozenPolicy>(trainer.frozen(s, kind)));
  }
  return out;
}

HeldoutResult train_heldout_ddqn(Role role, RunConfig cfg) {
  cfg.mode = Mode::kDdqnSelfplay;
  int slot = -1;
  for (int i = 0; i < static_cast<int>(cfg.arena.team.size()); ++i) {
    if (cfg.arena.team[i] == role) {
      slot = i;
      break;
    }
  }
  if (slot < 0) {
    throw UsageError("team has no " + std::string(role_name(role)) + " slot");
  }
  HeldoutResult out;
  out.trainer = std::make_unique<Trainer>(cfg);
  out.trainer->run();
  out.policy = std::make_shared<FrozenPolicy>(out.trainer->frozen(slot, Algo::kDdqn));
  return out;
}

HeldoutPool heldout_pool_from(const Trainer& trainer) {
  HeldoutPool pool;
  for (const auto& slot : trainer.slots()) {
    if (pool.count(slot.role)) continue;
    pool[slot.role] = std::make_shared<FrozenPolicy>(trainer.frozen(slot.id, Algo::kDdqn));
  }
  return pool;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "target,slot,role,spawn_config,repeat,return,length,captured\n";
  for (const auto& e : report.episodes) {
    out << e.target << "," << e.slot << "," << role_name(e.role) << "," << e.spawn_config
        << "," << e.repeat << "," << fmt(e.episode_return) << "," << e.length << ","
        << (e.captured ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_eval_summary_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "target,slot,role,episodes,mean_return,ci_low,ci_high,capture_rate\n";
  for (const auto& s : report.per_slot) {
    out << report.target << "," << s.slot << "," << role_name(s.role) << "," << s.episodes
        << "," << fmt(s.episode_return.mean) << "," << fmt(s.episode_return.low) << ","
        << fmt(s.episode_return.high) << "," << fmt(s.capture_rate) << "\n";
  }
  out << report.target << ",all,all," << report.episodes.size() << ","
      << fmt(report.episode_return.mean) << "," << fmt(report.episode_return.low) << ","
      << fmt(report.episode_return.high) << "," << fmt(report.capture_rate) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace rpt
