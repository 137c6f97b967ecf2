#ifndef RPT_LEARNERS_HPP_
#define RPT_LEARNERS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "buffers.hpp"
#include "checkpoint.hpp"
#include "numeric.hpp"
#include "rng.hpp"

namespace rpt {

enum class Algo { kPpo = 0, kA2c = 1, kDqn = 2, kDdqn = 3 };

std::string_view algo_name(Algo algo);  // "PPO", "A2C", "DQN", "DDQN"
Algo parse_algo(std::string_view name);  // case-insensitive

// Per-algorithm constants. Entries marked "assumed" are local defaults.
struct LearnerConfig {
  std::vector<int> hidden = {256, 256};
  double gamma = 0.99;

  // PPO / A2C
  double policy_learning_rate = 1e-4;
  int rollout_size = 512;
  int minibatch_size = 64;
  double gae_lambda = 0.95;
  double grad_norm_clip = 0.4;
  double entropy_coef = 0.015;
  int ppo_epochs = 3;
  double ppo_clip = 0.2;
  double value_coef = 0.5;               // assumed
  bool ppo_normalize_advantages = true;  // assumed

  // DQN / DDQN
  double q_learning_rate = 5e-5;
  int replay_size = 10000;
  int q_batch_size = 64;                      // assumed
  double epsilon_initial = 0.7;
  double epsilon_final = 0.04;                // assumed
  std::int64_t epsilon_timesteps = 600000;
  std::int64_t learning_starts = 16000;
  std::int64_t random_timesteps = 1024;
  std::int64_t target_update_interval = 1000;  // assumed
  std::int64_t train_frequency = 1;            // assumed

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct GaeConfig {
  double gamma = 0.99;
  double lambda = 0.95;
};

struct GaeResult {
  Vector advantages;
  Vector returns;
};

// next_values[t] is V of the state reached after step t. Accumulation stops
// after any step flagged done or truncated; done also zeroes the bootstrap.
GaeResult compute_gae(const Vector& rewards, const Vector& values,
                      const Vector& next_values, const std::vector<bool>& dones,
                      const std::vector<bool>& truncs, const GaeConfig& cfg);
// Contiguous-trajectory form: next value of step t is values[t + 1], and
// bootstrap_value for the last step.
GaeResult compute_gae(const Vector& rewards, const Vector& values,
                      double bootstrap_value, const std::vector<bool>& dones,
                      const std::vector<bool>& truncs, const GaeConfig& cfg);

// Rescale to zero mean and unit (population) standard deviation. When the
// spread is below 1e-8 the values are only centered.
Vector normalize_advantages(const Vector& advantages);

struct PolicyBatch {
  Matrix observations;  // already normalized
  std::vector<int> actions;
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
};

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

struct PpoLossConfig {
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.015;
  bool normalize_advantages = true;
};

struct A2cLossConfig {
  double value_coef = 0.5;
  double entropy_coef = 0.015;
};

// Per-sample clipped surrogate min(r * A, clip(r, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double clip);

// Mean over the batch of
//   -min(r A, clip(r) A) + value_coef * (V - R)^2 - entropy_coef * H.
// Gradients are written when the out-pointers are non-null.
LossReport ppo_loss(const Mlp& policy, const Mlp& value, const PolicyBatch& batch,
                    const PpoLossConfig& cfg, ParamSet* policy_grad,
                    ParamSet* value_grad);

// Mean over the batch of
//   -log pi(a|s) A + value_coef * (V - R)^2 - entropy_coef * H.
LossReport a2c_loss(const Mlp& policy, const Mlp& value, const PolicyBatch& batch,
                    const A2cLossConfig& cfg, ParamSet* policy_grad,
                    ParamSet* value_grad);

struct QBatch {
  Matrix observations;       // normalized
  std::vector<int> actions;
  Vector rewards;
  Matrix next_observations;  // normalized
  std::vector<bool> dones;   // truncation is not terminal here
};

// y = r + gamma (1 - done) Q_target(s', a*), with a* = argmax Q_target(s')
// or, when double_q, a* = argmax Q_online(s').
Vector q_targets(const QBatch& batch, const Mlp& online, const Mlp& target,
                 double gamma, bool double_q);

// mean((Q(s, a) - y)^2)
double td_loss(const Mlp& online, const QBatch& batch, const Vector& targets,
               ParamSet* grad);

struct EpsilonSchedule {
  double initial = 0.7;
  double final = 0.04;
  std::int64_t horizon = 600000;
};
double epsilon_at(const EpsilonSchedule& s, std::int64_t step);

enum class ActMode { kTrain, kEval };

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

// One algorithm instance with its own networks, optimizer state, memory,
// observation scaler and random stream.
class Learner {
 public:
  virtual ~Learner() = default;

  Algo kind() const { return kind_; }
  int observation_dim() const { return obs_dim_; }
  int action_count() const { return n_actions_; }
  // Transitions recorded by this learner.
  std::int64_t own_step() const { return own_step_; }
  std::int64_t update_count() const { return updates_; }
  const LossReport& last_loss() const { return last_loss_; }
  const RunningScaler& scaler() const { return scaler_; }
  const LearnerConfig& config() const { return cfg_; }

  // Train mode folds obs into the scaler and may draw from the learner's rng.
  virtual ActResult act(const Vector& obs, ActMode mode) = 0;
  // Deterministic evaluation action; never mutates the learner.
  virtual int act_greedy(const Vector& obs) const = 0;
  // Stores t in this learner's memory and runs an update when its gate opens.
  virtual void record(const Transition& t) = 0;

  virtual std::unique_ptr<Learner> clone() const = 0;

  virtual void save(Archive& ar, const std::string& prefix) const;
  virtual void load(const Archive& ar, const std::string& prefix);

 protected:
  Learner(Algo kind, int obs_dim, int n_actions, const LearnerConfig& cfg,
          std::uint64_t seed);

  void check_obs(const Vector& obs) const;

  Algo kind_;
  int obs_dim_;
  int n_actions_;
  LearnerConfig cfg_;
  RunningScaler scaler_;
  Rng rng_;
  std::int64_t own_step_ = 0;
  std::int64_t updates_ = 0;
  LossReport last_loss_;
};

// PPO or A2C: categorical policy net plus a separate value net.
class ActorCriticLearner : public Learner {
 public:
  ActorCriticLearner(Algo kind, int obs_dim, int n_actions,
                     const LearnerConfig& cfg, std::uint64_t seed);

  ActResult act(const Vector& obs, ActMode mode) override;
  int act_greedy(const Vector& obs) const override;
  void record(const Transition& t) override;
  std::unique_ptr<Learner> clone() const override;
  void save(Archive& ar, const std::string& prefix) const override;
  void load(const Archive& ar, const std::string& prefix) override;

  const Mlp& policy() const { return policy_; }
  const Mlp& value() const { return value_; }
  Mlp& policy() { return policy_; }
  Mlp& value() { return value_; }
  const RolloutBuffer& rollout() const { return rollout_; }

  // Consumes the full rollout; throws UsageError otherwise.
  LossReport update();

 private:
  GaeResult rollout_advantages() const;

  Mlp policy_;
  Mlp value_;
  AdamState policy_opt_;
  AdamState value_opt_;
  RolloutBuffer rollout_;
};

// DQN, or DDQN when kind is kDdqn.
class QLearner : public Learner {
 public:
  QLearner(Algo kind, int obs_dim, int n_actions, const LearnerConfig& cfg,
           std::uint64_t seed);

  ActResult act(const Vector& obs, ActMode mode) override;
  int act_greedy(const Vector& obs) const override;
  void record(const Transition& t) override;
  std::unique_ptr<Learner> clone() const override;
  void save(Archive& ar, const std::string& prefix) const override;
  void load(const Archive& ar, const std::string& prefix) override;

  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  Mlp& online() { return online_; }
  Mlp& target() { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  double epsilon() const;
  bool double_q() const { return kind_ == Algo::kDdqn; }

  // One gradient step on a sampled batch. No-op before learning starts or
  // while the replay holds fewer than a batch; returns whether it ran.
  bool update();

 private:
  Mlp online_;
  Mlp target_;
  AdamState opt_;
  ReplayBuffer replay_;
};

std::unique_ptr<Learner> make_learner(Algo kind, int obs_dim, int n_actions,
                                      const LearnerConfig& cfg,
                                      std::uint64_t seed);

}  // namespace rpt

#endif  // RPT_LEARNERS_HPP_
