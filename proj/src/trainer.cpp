#include "trainer.hpp"

#include <cstdio>
#include <filesystem>

#include "error.hpp"

namespace rpt {

namespace fs = std::filesystem;

Learner* AgentSlot::find(Algo kind) {
  for (auto& l : pool) {
    if (l->kind() == kind) return l.get();
  }
  return nullptr;
}

const Learner* AgentSlot::find(Algo kind) const {
  for (const auto& l : pool) {
    if (l->kind() == kind) return l.get();
  }
  return nullptr;
}

void mark_episode_end(AgentSlot& slot, bool done, bool truncated) {
  slot.switch_pending = done || truncated;
}

void rotate_if_pending(AgentSlot& slot, Rng& rng) {
  if (!slot.switch_pending) return;
  slot.switch_pending = false;
  if (slot.pool.size() <= 1) return;
  slot.active = static_cast<int>(rng.uniform_int(slot.pool.size()));
}

TimestepAccount account_timesteps(Mode mode, std::int64_t env_steps, int team_size) {
  if (env_steps < 0 || team_size < 0) throw UsageError("negative timestep inputs");
  TimestepAccount a;
  a.agent_timesteps = env_steps * team_size;
  a.per_learner_share = 1.0 / static_cast<double>(pool_for(mode).size());
  return a;
}

std::vector<Algo> pool_for(Mode mode) {
  switch (mode) {
    case Mode::kRpt: return {Algo::kPpo, Algo::kA2c, Algo::kDqn};
    case Mode::kIppo: return {Algo::kPpo};
    case Mode::kDdqnSelfplay: return {Algo::kDdqn};
  }
  throw UsageError("unknown mode");
}

std::vector<std::string> metrics_rows(const EpisodeResult& r, const std::vector<Role>& team) {
  std::vector<std::string> rows;
  char ret[64];
  std::snprintf(ret, sizeof(ret), "%.6f", r.team_return);
  for (std::size_t i = 0; i < team.size(); ++i) {
    rows.push_back(std::to_string(r.episode) + "," + std::to_string(r.agent_timesteps) +
                   "," + r.spawn_config + "," + std::to_string(i) + "," +
                   std::string(role_name(team[i])) + "," +
                   std::string(algo_name(r.active.at(i))) + "," + ret + "," +
                   std::to_string(r.length) + "," + (r.captured ? "1" : "0"));
  }
  return rows;
}

namespace {

// Drops rows logged after the checkpoint being resumed, so a run that died
// between checkpoints does not leave duplicate episodes behind.
void trim_metrics_log(const std::string& path, std::int64_t episodes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metrics log " + path);
  std::string header, line, kept;
  std::getline(in, header);
  if (header != kMetricsHeader) throw FormatError(path + ":1: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoll(line.substr(0, line.find(','))) < episodes) kept += line + "\n";
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << header << "\n" << kept;
  if (!out) throw IoError("cannot rewrite metrics log " + path);
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg)
    : cfg_(cfg),
      arena_(cfg.arena, derive_seed(cfg.seed, 1)),
      spawn_configs_(default_spawn_configs(cfg.arena)),
      rotation_rng_(derive_seed(cfg.seed, 2)) {
  validate(cfg_);
  const std::vector<Algo> kinds = pool_for(cfg_.mode);
  const int obs_dim = arena_.observation_dim();
  for (int i = 0; i < arena_.team_size(); ++i) {
    AgentSlot slot;
    slot.id = i;
    slot.role = arena_.role(i);
    for (Algo k : kinds) {
      slot.pool.push_back(make_learner(k, obs_dim, kMoveCount, cfg_.learner,
                                       derive_seed(cfg_.seed, 3, i, static_cast<int>(k))));
    }
    slots_.push_back(std::move(slot));
    selections_.emplace_back(kinds.size(), 0);
  }
}

void Trainer::set_total_agent_timesteps(std::int64_t total) {
  if (total <= 0) throw ConfigError("total_agent_timesteps must be positive");
  cfg_.total_agent_timesteps = total;
}

EpisodeResult Trainer::run_episode() {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    AgentSlot& slot = slots_[i];
    const bool pending = slot.switch_pending;
    rotate_if_pending(slot, rotation_rng_);
    if (pending && slot.pool.size() > 1) ++selections_[i][slot.active];
  }

  const SpawnConfig& spawn = curriculum_next(spawn_configs_, episodes_);
  std::vector<Vector> obs = arena_.reset(spawn);
  const int n = arena_.team_size();

  EpisodeResult result;
  result.episode = episodes_;
  result.spawn_config = spawn.id;
  for (const auto& slot : slots_) result.active.push_back(slot.active_learner().kind());

  std::vector<ActResult> acts(n);
  std::vector<int> actions(n);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      acts[i] = slots_[i].active_learner().act(obs[i], ActMode::kTrain);
      actions[i] = acts[i].action;
    }
    StepResult step = arena_.step(actions);
    for (int i = 0; i < n; ++i) {
      Transition t;
      t.observation = std::move(obs[i]);
      t.action = actions[i];
      t.reward = step.rewards[i];
      t.next_observation = step.observations[i];
      t.done = step.dones[i];
      t.truncated = step.truncs[i];
      t.log_prob = acts[i].log_prob;
      t.value = acts[i].value;
      slots_[i].active_learner().record(t);
      if (t.done || t.truncated) mark_episode_end(slots_[i], t.done, t.truncated);
    }
    result.team_return += step.rewards[0];
    result.length += 1;
    env_steps_ += 1;
    agent_timesteps_ += n;

    if (on_step) {
      StepTrace trace;
      trace.episode = episodes_;
      trace.step = result.length;
      for (const auto& slot : slots_) trace.active.push_back(slot.active_learner().kind());
      trace.actions = actions;
      trace.agents = arena_.state().agents;
      trace.target = arena_.state().target;
      trace.reward = step.rewards[0];
      trace.done = step.dones[0];
      trace.truncated = step.truncs[0];
      on_step(trace);
    }

    obs = std::move(step.observations);
    if (arena_.episode_over()) {
      result.captured = step.captured;
      break;
    }
  }
  ++episodes_;
  result.agent_timesteps = agent_timesteps_;
  if (on_episode) on_episode(result);
  return result;
}

void Trainer::run() {
  const bool write = !cfg_.output_dir.empty();
  std::ofstream metrics;
  std::string checkpoint_path;
  if (write) {
    std::error_code ec;
    fs::create_directories(cfg_.output_dir, ec);
    if (ec) throw IoError("cannot create output dir " + cfg_.output_dir + ": " + ec.message());
    const fs::path dir(cfg_.output_dir);
    save_run_config(cfg_, (dir / "resolved_config.json").string());
    const fs::path metrics_path = dir / "metrics.csv";
    const bool append = episodes_ > 0 && fs::exists(metrics_path);
    if (append) trim_metrics_log(metrics_path.string(), episodes_);
    metrics.open(metrics_path, append ? std::ios::app : std::ios::trunc);
    if (!metrics) throw IoError("cannot open metrics log " + metrics_path.string());
    if (!append) metrics << kMetricsHeader << "\n";
    checkpoint_path = (dir / "checkpoint.ckpt").string();
  }

  bool checkpoint_current = false;
  while (agent_timesteps_ < cfg_.total_agent_timesteps) {
    const EpisodeResult r = run_episode();
    checkpoint_current = false;
    if (write) {
      for (const auto& row : metrics_rows(r, cfg_.arena.team)) metrics << row << "\n";
      metrics.flush();
      if (!metrics) throw IoError("failed writing metrics log");
      if (episodes_ % cfg_.checkpoint_every == 0) {
        write_checkpoint(checkpoint_path);
        checkpoint_current = true;
      }
    }
  }
  if (write && !checkpoint_current) write_checkpoint(checkpoint_path);
}

void Trainer::save(Archive& ar) const {
  ar.put_text("config", to_json(cfg_).dump());
  ar.put_counter("episodes", episodes_);
  ar.put_counter("env_steps", env_steps_);
  ar.put_counter("agent_timesteps", agent_timesteps_);
  ar.put_text("rng/rotation", rotation_rng_.save());
  ar.put_text("rng/arena", arena_.rng().save());
  for (const auto& slot : slots_) {
    const std::string prefix = "slot" + std::to_string(slot.id);
    ar.put_counter(prefix + "/active", slot.active);
    ar.put_counter(prefix + "/switch_pending", slot.switch_pending ? 1 : 0);
    for (std::size_t k = 0; k < slot.pool.size(); ++k) {
      ar.put_counter(prefix + "/selections/" + std::to_string(k), selections_[slot.id][k]);
    }
    for (const auto& learner : slot.pool) {
      learner->save(ar, prefix + "/" + std::string(algo_name(learner->kind())));
    }
  }
}

void Trainer::write_checkpoint(const std::string& path) const {
  Archive ar;
  save(ar);
  ar.write(path);
}

std::unique_ptr<Trainer> Trainer::from_archive(const Archive& ar) {
  RunConfig cfg;
  try {
    cfg = run_config_from_json(nlohmann::json::parse(ar.text("config")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  // Loading into a fresh trainer means a failure leaves no caller state touched.
  auto t = std::make_unique<Trainer>(cfg);
  t->episodes_ = ar.counter("episodes");
  t->env_steps_ = ar.counter("env_steps");
  t->agent_timesteps_ = ar.counter("agent_timesteps");
  t->rotation_rng_.load(ar.text("rng/rotation"));
  t->arena_.rng().load(ar.text("rng/arena"));
  for (auto& slot : t->slots_) {
    const std::string prefix = "slot" + std::to_string(slot.id);
    const std::int64_t active = ar.counter(prefix + "/active");
    if (active < 0 || active >= static_cast<std::int64_t>(slot.pool.size())) {
      throw FormatError("checkpoint active index out of range for " + prefix);
    }
    slot.active = static_cast<int>(active);
    slot.switch_pending = ar.counter(prefix + "/switch_pending") != 0;
    for (std::size_t k = 0; k < slot.pool.size(); ++k) {
      t->selections_[slot.id][k] = ar.counter(prefix + "/selections/" + std::to_string(k));
    }
    for (auto& learner : slot.pool) {
      learner->load(ar, prefix + "/" + std::string(algo_name(learner->kind())));
    }
  }
  return t;
}

std::unique_ptr<Trainer> Trainer::from_checkpoint(const std::string& path) {
  return from_archive(Archive::read(path));
}

std::shared_ptr<const Learner> Trainer::frozen(int slot, Algo kind) const {
  if (slot < 0 || slot >= static_cast<int>(slots_.size())) {
    throw UsageError("slot " + std::to_string(slot) + " out of range");
  }
  const Learner* l = slots_[slot].find(kind);
  if (l == nullptr) {
    throw UsageError("slot " + std::to_string(slot) + " has no " +
                     std::string(algo_name(kind)) + " learner");
  }
  return std::shared_ptr<const Learner>(l->clone());
}

}  // namespace rpt
