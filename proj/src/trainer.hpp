#ifndef RPT_TRAINER_HPP_
#define RPT_TRAINER_HPP_

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "arena.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "learners.hpp"
#include "rng.hpp"

namespace rpt {

// One controllable agent and its pool of learners. In RPT the pool holds
// {PPO, A2C, DQN} in that order; other modes hold a single learner.
struct AgentSlot {
  int id = 0;
  Role role = Role::kObserver;
  std::vector<std::unique_ptr<Learner>> pool;
  int active = 0;
  bool switch_pending = false;

  Learner& active_learner() { return *pool.at(active); }
  const Learner& active_learner() const { return *pool.at(active); }
  Learner* find(Algo kind);
  const Learner* find(Algo kind) const;
};

// Record-transition hook: flags the slot for rotation when its episode ended.
void mark_episode_end(AgentSlot& slot, bool done, bool truncated);

// Pre-interaction hook: consumes a pending flag by drawing the next active
// learner uniformly from the pool (the current one may be drawn again).
// Pools of one learner never change.
void rotate_if_pending(AgentSlot& slot, Rng& rng);

struct TimestepAccount {
  std::int64_t agent_timesteps = 0;
  double per_learner_share = 1.0;  // expected fraction of an agent's steps
};
TimestepAccount account_timesteps(Mode mode, std::int64_t env_steps, int team_size);

std::vector<Algo> pool_for(Mode mode);

struct StepTrace {
  std::int64_t episode = 0;
  int step = 0;  // 1-based within the episode
  std::vector<Algo> active;
  std::vector<int> actions;
  std::vector<Cell> agents;
  Cell target;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
};

struct EpisodeResult {
  std::int64_t episode = 0;
  std::int64_t agent_timesteps = 0;  // cumulative, after this episode
  std::string spawn_config;
  std::vector<Algo> active;
  double team_return = 0.0;
  int length = 0;
  bool captured = false;
};

inline constexpr const char* kMetricsHeader =
    "episode,agent_timesteps,spawn_config,agent_id,role,active_algo,"
    "episode_return,episode_length,captured";

// One CSV line (no trailing newline) per agent for this episode.
std::vector<std::string> metrics_rows(const EpisodeResult& r, const std::vector<Role>& team);

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  // Rebuilds a trainer from a checkpoint; the embedded config is used.
  static std::unique_ptr<Trainer> from_archive(const Archive& ar);
  static std::unique_ptr<Trainer> from_checkpoint(const std::string& path);

  const RunConfig& config() const { return cfg_; }
  // Raising the budget lets a resumed run continue.
  void set_total_agent_timesteps(std::int64_t total);
  void set_output_dir(const std::string& dir) { cfg_.output_dir = dir; }

  EpisodeResult run_episode();
  // Runs whole episodes until the budget is reached. With an output dir set,
  // appends to metrics.csv, writes resolved_config.json and keeps
  // checkpoint.ckpt current.
  void run();

  void save(Archive& ar) const;
  void write_checkpoint(const std::string& path) const;

  std::int64_t episodes() const { return episodes_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t agent_timesteps() const { return agent_timesteps_; }
  const std::vector<AgentSlot>& slots() const { return slots_; }
  const Arena& arena() const { return arena_; }
  const std::vector<SpawnConfig>& spawn_configs() const { return spawn_configs_; }
  // Rotation draws per slot per pool index.
  const std::vector<std::vector<std::int64_t>>& selection_counts() const {
    return selections_;
  }

  // Deep copy of a slot's learner for evaluation.
  std::shared_ptr<const Learner> frozen(int slot, Algo kind) const;

  std::function<void(const StepTrace&)> on_step;
  std::function<void(const EpisodeResult&)> on_episode;

 private:
  RunConfig cfg_;
  Arena arena_;
  std::vector<SpawnConfig> spawn_configs_;
  std::vector<AgentSlot> slots_;
  Rng rotation_rng_;
  std::int64_t episodes_ = 0;
  std::int64_t env_steps_ = 0;
  std::int64_t agent_timesteps_ = 0;
  std::vector<std::vector<std::int64_t>> selections_;
};

}  // namespace rpt

#endif  // RPT_TRAINER_HPP_
