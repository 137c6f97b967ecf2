#ifndef RPT_EVALUATION_HPP_
#define RPT_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arena.hpp"
#include "config.hpp"
#include "learners.hpp"
#include "trainer.hpp"

namespace rpt {

// Deterministic, read-only acting rule.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int act(const Vector& obs) const = 0;
  virtual int observation_dim() const = 0;
};

// Greedy action of a frozen learner copy.
class FrozenPolicy : public Policy {
 public:
  explicit FrozenPolicy(std::shared_ptr<const Learner> learner)
      : learner_(std::move(learner)) {}
  int act(const Vector& obs) const override { return learner_->act_greedy(obs); }
  int observation_dim() const override { return learner_->observation_dim(); }
  const Learner& learner() const { return *learner_; }

 private:
  std::shared_ptr<const Learner> learner_;
};

using PolicyPtr = std::shared_ptr<const Policy>;
// One frozen partner per role.
using HeldoutPool = std::map<Role, PolicyPtr>;

struct EvalEpisode {
  std::string target;
  int slot = 0;
  Role role = Role::kObserver;
  std::string spawn_config;
  int repeat = 0;
  double episode_return = 0.0;
  int length = 0;
  bool captured = false;
};

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap of the mean; deterministic for a given seed.
Interval bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed,
                           int resamples = 10000, double level = 0.95);

struct SlotSummary {
  int slot = 0;
  Role role = Role::kObserver;
  int episodes = 0;
  Interval episode_return;
  double capture_rate = 0.0;
};

struct EvalReport {
  std::string target;
  std::vector<EvalEpisode> episodes;  // slot-major, then config, then repeat
  std::vector<SlotSummary> per_slot;
  Interval episode_return;
  double capture_rate = 0.0;
};

// Runs slots x configs x repeats episodes. In each, `slot` acts with
// target_by_slot[slot] and every other slot with pool[its role]. Episode
// randomness comes only from derive_seed(seed, slot, config, repeat).
EvalReport evaluate_mixed_team(const std::string& target_name,
                               const std::vector<PolicyPtr>& target_by_slot,
                               const HeldoutPool& pool, const ArenaConfig& arena,
                               const std::vector<SpawnConfig>& configs, int repeats,
                               std::uint64_t seed);

// Plays one episode with a fixed policy per slot.
EvalEpisode play_episode(const std::vector<PolicyPtr>& team, const ArenaConfig& arena,
                         const SpawnConfig& spawn, std::uint64_t seed,
                         const std::function<void(const Arena&, const std::vector<int>&,
                                                  const StepResult&)>& on_step = {});

std::vector<PolicyPtr> frozen_policies(const Trainer& trainer, Algo kind);

struct HeldoutResult {
  PolicyPtr policy;
  std::unique_ptr<Trainer> trainer;
};

// Self-play training where every slot runs a DDQN learner; returns the frozen
// learner of the first slot with the requested role.
HeldoutResult train_heldout_ddqn(Role role, RunConfig cfg);

// Builds a pool from per-role trainers (or one self-play trainer for both).
HeldoutPool heldout_pool_from(const Trainer& trainer);

// CSV exports.
void write_eval_csv(const EvalReport& report, const std::string& path);
void write_eval_summary_csv(const EvalReport& report, const std::string& path);

}  // namespace rpt

#endif  // RPT_EVALUATION_HPP_
