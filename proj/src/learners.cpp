#include "learners.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace rpt {

std::string_view algo_name(Algo algo) {
  switch (algo) {
    case Algo::kPpo: return "PPO";
    case Algo::kA2c: return "A2C";
    case Algo::kDqn: return "DQN";
    case Algo::kDdqn: return "DDQN";
  }
  return "?";
}

Algo parse_algo(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "PPO") return Algo::kPpo;
  if (upper == "A2C") return Algo::kA2c;
  if (upper == "DQN") return Algo::kDqn;
  if (upper == "DDQN") return Algo::kDdqn;
  throw UsageError("unknown algorithm '" + std::string(name) + "'");
}

GaeResult compute_gae(const Vector& rewards, const Vector& values,
                      const Vector& next_values, const std::vector<bool>& dones,
                      const std::vector<bool>& truncs, const GaeConfig& cfg) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || next_values.size() != n ||
      static_cast<Eigen::Index>(dones.size()) != n ||
      static_cast<Eigen::Index>(truncs.size()) != n) {
    throw ShapeError("compute_gae: sequence lengths differ");
  }
  GaeResult out{Vector::Zero(n), Vector::Zero(n)};
  double running = 0.0;
  for (Eigen::Index t = n; t-- > 0;) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + cfg.gamma * next_values[t] * not_done - values[t];
    const bool boundary = dones[t] || truncs[t];
    running = delta + cfg.gamma * cfg.lambda * (boundary ? 0.0 : running);
    out.advantages[t] = running;
  }
  out.returns = out.advantages + values;
  return out;
}

GaeResult compute_gae(const Vector& rewards, const Vector& values,
                      double bootstrap_value, const std::vector<bool>& dones,
                      const std::vector<bool>& truncs, const GaeConfig& cfg) {
  const Eigen::Index n = values.size();
  if (rewards.size() != n) throw ShapeError("compute_gae: sequence lengths differ");
  Vector next(n);
  for (Eigen::Index t = 0; t + 1 < n; ++t) next[t] = values[t + 1];
  if (n > 0) next[n - 1] = bootstrap_value;
  return compute_gae(rewards, values, next, dones, truncs, cfg);
}

Vector normalize_advantages(const Vector& advantages) {
  if (advantages.size() == 0) return advantages;
  const double mean = advantages.mean();
  Vector centered = advantages.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(centered.size()));
  if (std > 1e-8) centered /= std;
  return centered;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

void check_batch(const PolicyBatch& b) {
  const auto n = b.observations.rows();
  if (static_cast<Eigen::Index>(b.actions.size()) != n || b.advantages.size() != n ||
      b.returns.size() != n || b.old_log_probs.size() != n || n == 0) {
    throw ShapeError("policy batch fields have inconsistent lengths");
  }
}

// Shared actor-critic loss. pg_weight(i, log_prob) returns the per-sample
// policy loss term and its derivative with respect to log pi(a_i|s_i).
template <typename PolicyTerm>
LossReport actor_critic_loss(const Mlp& policy, const Mlp& value,
                             const PolicyBatch& batch, double value_coef,
                             double entropy_coef, PolicyTerm&& policy_term,
                             ParamSet* policy_grad, ParamSet* value_grad) {
  check_batch(batch);
  const Eigen::Index n = batch.observations.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Tape ptape, vtape;
  const Matrix logits = policy.forward(batch.observations, policy_grad ? &ptape : nullptr);
  const Matrix v = value.forward(batch.observations, value_grad ? &vtape : nullptr);
  const Eigen::Index n_actions = logits.cols();

  Matrix d_logits = Matrix::Zero(n, n_actions);
  Matrix d_value = Matrix::Zero(n, 1);
  LossReport r;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[i];
    if (a < 0 || a >= n_actions) throw UsageError("action out of range in batch");
    const Vector lp = log_softmax(logits.row(i).transpose());
    const Vector p = lp.array().exp().matrix();
    double h = 0.0;
    for (Eigen::Index j = 0; j < n_actions; ++j) {
      if (p[j] > 0.0) h -= p[j] * lp[j];
    }
    const auto [loss_i, dlogp, clipped] = policy_term(i, lp[a]);
    const double err = v(i, 0) - batch.returns[i];

    r.policy_loss += loss_i;
    r.entropy += h;
    r.value_loss += err * err;
    r.clip_fraction += clipped ? 1.0 : 0.0;

    for (Eigen::Index j = 0; j < n_actions; ++j) {
      const double onehot = (j == a) ? 1.0 : 0.0;
      const double ent = p[j] > 0.0 ? entropy_coef * p[j] * (lp[j] + h) : 0.0;
      d_logits(i, j) = (dlogp * (onehot - p[j]) + ent) * inv_n;
    }
    d_value(i, 0) = 2.0 * value_coef * err * inv_n;
  }
  r.policy_loss *= inv_n;
  r.entropy *= inv_n;
  r.value_loss *= inv_n;
  r.clip_fraction *= inv_n;
  r.total = r.policy_loss + value_coef * r.value_loss - entropy_coef * r.entropy;
  if (policy_grad) *policy_grad = policy.backward(ptape, d_logits);
  if (value_grad) *value_grad = value.backward(vtape, d_value);
  return r;
}

struct PolicyTermResult {
  double loss;
  double dlogp;
  bool clipped;
};

}  // namespace

LossReport ppo_loss(const Mlp& policy, const Mlp& value, const PolicyBatch& batch,
                    const PpoLossConfig& cfg, ParamSet* policy_grad,
                    ParamSet* value_grad) {
  check_batch(batch);
  const Vector adv = cfg.normalize_advantages ? normalize_advantages(batch.advantages)
                                              : batch.advantages;
  auto term = [&](Eigen::Index i, double log_prob) {
    const double ratio = std::exp(log_prob - batch.old_log_probs[i]);
    const double a = adv[i];
    const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const double unclipped = ratio * a;
    const double clipped = clipped_ratio * a;
    // Inside the clip range both branches coincide and carry the gradient.
    const bool use_unclipped = unclipped <= clipped;
    return PolicyTermResult{-std::min(unclipped, clipped),
                            use_unclipped ? -a * ratio : 0.0,
                            std::abs(ratio - 1.0) > cfg.clip};
  };
  return actor_critic_loss(policy, value, batch, cfg.value_coef, cfg.entropy_coef,
                           term, policy_grad, value_grad);
}

LossReport a2c_loss(const Mlp& policy, const Mlp& value, const PolicyBatch& batch,
                    const A2cLossConfig& cfg, ParamSet* policy_grad,
                    ParamSet* value_grad) {
  auto term = [&](Eigen::Index i, double log_prob) {
    const double a = batch.advantages[i];
    return PolicyTermResult{-log_prob * a, -a, false};
  };
  return actor_critic_loss(policy, value, batch, cfg.value_coef, cfg.entropy_coef,
                           term, policy_grad, value_grad);
}

Vector q_targets(const QBatch& batch, const Mlp& online, const Mlp& target,
                 double gamma, bool double_q) {
  const Eigen::Index n = batch.next_observations.rows();
  if (batch.rewards.size() != n || static_cast<Eigen::Index>(batch.dones.size()) != n) {
    throw ShapeError("q batch fields have inconsistent lengths");
  }
  const Matrix q_next = target.forward(batch.next_observations);
  Matrix q_select;
  if (double_q) q_select = online.forward(batch.next_observations);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double next;
    if (double_q) {
      next = q_next(i, argmax(q_select.row(i).transpose()));
    } else {
      next = q_next.row(i).maxCoeff();
    }
    y[i] = batch.rewards[i] + (batch.dones[i] ? 0.0 : gamma * next);
  }
  return y;
}

double td_loss(const Mlp& online, const QBatch& batch, const Vector& targets,
               ParamSet* grad) {
  const Eigen::Index n = batch.observations.rows();
  if (static_cast<Eigen::Index>(batch.actions.size()) != n || targets.size() != n || n == 0) {
    throw ShapeError("td_loss: inconsistent batch");
  }
  Tape tape;
  const Matrix q = online.forward(batch.observations, grad ? &tape : nullptr);
  Matrix upstream = Matrix::Zero(n, q.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[i];
    if (a < 0 || a >= q.cols()) throw UsageError("action out of range in batch");
    const double diff = q(i, a) - targets[i];
    loss += diff * diff;
    upstream(i, a) = 2.0 * diff / static_cast<double>(n);
  }
  if (grad) *grad = online.backward(tape, upstream);
  return loss / static_cast<double>(n);
}

double epsilon_at(const EpsilonSchedule& s, std::int64_t step) {
  if (step <= 0) return s.initial;
  if (step >= s.horizon) return s.final;
  const double frac = static_cast<double>(step) / static_cast<double>(s.horizon);
  return s.initial + (s.final - s.initial) * frac;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> with_hidden(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

AdamConfig adam_config(const LearnerConfig& cfg, double lr) {
  return AdamConfig{lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
}

void save_adam(Archive& ar, const std::string& prefix, const AdamState& s) {
  put_params(ar, prefix + "/m", s.first_moment);
  put_params(ar, prefix + "/v", s.second_moment);
  ar.put_counter(prefix + "/step", s.step);
}

void load_adam(const Archive& ar, const std::string& prefix, AdamState& s) {
  get_params(ar, prefix + "/m", s.first_moment);
  get_params(ar, prefix + "/v", s.second_moment);
  s.step = ar.counter(prefix + "/step");
}

template <typename Range>
void save_transitions(Archive& ar, const std::string& prefix, const Range& items,
                      int obs_dim) {
  const auto n = static_cast<Eigen::Index>(items.size());
  Matrix obs(n, obs_dim), next(n, obs_dim);
  Vector actions(n), rewards(n), dones(n), truncs(n), log_probs(n), values(n);
  Eigen::Index i = 0;
  for (const Transition& t : items) {
    obs.row(i) = t.observation.transpose();
    next.row(i) = t.next_observation.transpose();
    actions[i] = t.action;
    rewards[i] = t.reward;
    dones[i] = t.done ? 1.0 : 0.0;
    truncs[i] = t.truncated ? 1.0 : 0.0;
    log_probs[i] = t.log_prob;
    values[i] = t.value;
    ++i;
  }
  ar.put_matrix(prefix + "/obs", obs);
  ar.put_matrix(prefix + "/next_obs", next);
  ar.put_vector(prefix + "/action", actions);
  ar.put_vector(prefix + "/reward", rewards);
  ar.put_vector(prefix + "/done", dones);
  ar.put_vector(prefix + "/trunc", truncs);
  ar.put_vector(prefix + "/log_prob", log_probs);
  ar.put_vector(prefix + "/value", values);
}

std::vector<Transition> load_transitions(const Archive& ar, const std::string& prefix,
                                         int obs_dim) {
  const Matrix& obs = ar.matrix(prefix + "/obs");
  const Matrix& next = ar.matrix(prefix + "/next_obs");
  const Eigen::Index n = obs.rows();
  const Vector actions = ar.vector(prefix + "/action");
  const Vector rewards = ar.vector(prefix + "/reward");
  const Vector dones = ar.vector(prefix + "/done");
  const Vector truncs = ar.vector(prefix + "/trunc");
  const Vector log_probs = ar.vector(prefix + "/log_prob");
  const Vector values = ar.vector(prefix + "/value");
  if (obs.cols() != obs_dim || next.rows() != n || next.cols() != obs_dim ||
      actions.size() != n || rewards.size() != n || dones.size() != n ||
      truncs.size() != n || log_probs.size() != n || values.size() != n) {
    throw FormatError("checkpoint transition arrays under '" + prefix +
                      "' have inconsistent shapes");
  }
  std::vector<Transition> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Transition& t = out[i];
    t.observation = obs.row(i).transpose();
    t.next_observation = next.row(i).transpose();
    t.action = static_cast<int>(actions[i]);
    t.reward = rewards[i];
    t.done = dones[i] != 0.0;
    t.truncated = truncs[i] != 0.0;
    t.log_prob = log_probs[i];
    t.value = values[i];
  }
  return out;
}

}  // namespace

Learner::Learner(Algo kind, int obs_dim, int n_actions, const LearnerConfig& cfg,
                 std::uint64_t seed)
    : kind_(kind), obs_dim_(obs_dim), n_actions_(n_actions), cfg_(cfg),
      scaler_(obs_dim), rng_(seed) {
  if (obs_dim <= 0 || n_actions <= 0) {
    throw ShapeError("learner needs positive observation and action dims");
  }
}

void Learner::check_obs(const Vector& obs) const {
  if (obs.size() != obs_dim_) {
    throw ShapeError(std::string(algo_name(kind_)) + " learner expects " +
                     std::to_string(obs_dim_) + " observation entries, got " +
                     std::to_string(obs.size()));
  }
}

void Learner::save(Archive& ar, const std::string& prefix) const {
  ar.put_text(prefix + "/kind", std::string(algo_name(kind_)));
  ar.put_counter(prefix + "/own_step", own_step_);
  ar.put_counter(prefix + "/updates", updates_);
  ar.put_text(prefix + "/rng", rng_.save());
  ar.put_vector(prefix + "/scaler/mean", scaler_.mean());
  ar.put_vector(prefix + "/scaler/var", scaler_.variance());
  ar.put_real(prefix + "/scaler/count", scaler_.count());
}

void Learner::load(const Archive& ar, const std::string& prefix) {
  if (parse_algo(ar.text(prefix + "/kind")) != kind_) {
    throw FormatError("checkpoint learner '" + prefix + "' has kind " +
                      ar.text(prefix + "/kind") + ", expected " +
                      std::string(algo_name(kind_)));
  }
  Vector mean = ar.vector(prefix + "/scaler/mean");
  Vector var = ar.vector(prefix + "/scaler/var");
  if (mean.size() != obs_dim_ || var.size() != obs_dim_) {
    throw FormatError("checkpoint scaler '" + prefix + "' has wrong dimension");
  }
  own_step_ = ar.counter(prefix + "/own_step");
  updates_ = ar.counter(prefix + "/updates");
  rng_.load(ar.text(prefix + "/rng"));
  scaler_.restore(std::move(mean), std::move(var), ar.real(prefix + "/scaler/count"));
}

// ---------------------------------------------------------------------------

ActorCriticLearner::ActorCriticLearner(Algo kind, int obs_dim, int n_actions,
                                       const LearnerConfig& cfg, std::uint64_t seed)
    : Learner(kind, obs_dim, n_actions, cfg, seed), rollout_(cfg.rollout_size) {
  if (kind != Algo::kPpo && kind != Algo::kA2c) {
    throw UsageError("actor-critic learner must be PPO or A2C");
  }
  policy_ = Mlp::initialized(with_hidden(obs_dim, cfg.hidden, n_actions), rng_);
  value_ = Mlp::initialized(with_hidden(obs_dim, cfg.hidden, 1), rng_);
  policy_opt_ = AdamState(policy_.params(), adam_config(cfg, cfg.policy_learning_rate));
  value_opt_ = AdamState(value_.params(), adam_config(cfg, cfg.policy_learning_rate));
}

ActResult ActorCriticLearner::act(const Vector& obs, ActMode mode) {
  check_obs(obs);
  if (mode == ActMode::kTrain) scaler_.update(obs);
  const Vector x = scaler_.normalize(obs);
  const Vector logits = policy_.forward(x);
  ActResult r;
  r.action = mode == ActMode::kTrain ? categorical_sample(logits, rng_) : argmax(logits);
  r.log_prob = categorical_stats(logits, r.action).log_prob;
  r.value = value_.forward(x)[0];
  return r;
}

int ActorCriticLearner::act_greedy(const Vector& obs) const {
  check_obs(obs);
  return argmax(policy_.forward(scaler_.normalize(obs)));
}

void ActorCriticLearner::record(const Transition& t) {
  check_obs(t.observation);
  check_obs(t.next_observation);
  // The scaler has not moved since act() on this observation, so the stored
  // input reproduces the recorded log-probability exactly.
  Transition stored = t;
  stored.observation = scaler_.normalize(t.observation);
  stored.next_observation = scaler_.normalize(t.next_observation);
  ++own_step_;
  if (rollout_.record(std::move(stored))) update();
}

GaeResult ActorCriticLearner::rollout_advantages() const {
  const auto& items = rollout_.items();
  const auto n = static_cast<Eigen::Index>(items.size());
  Vector rewards(n), values(n), next_values(n);
  Matrix next_obs(n, obs_dim_);
  std::vector<bool> dones(n), truncs(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    rewards[t] = items[t].reward;
    values[t] = items[t].value;
    dones[t] = items[t].done;
    truncs[t] = items[t].truncated;
    next_obs.row(t) = items[t].next_observation.transpose();
  }
  // Episode cuts and the end of the rollout bootstrap from the current value
  // net; inside an episode the stored value of the following step is used.
  const Matrix v_next = value_.forward(next_obs);
  for (Eigen::Index t = 0; t < n; ++t) {
    const bool continues = t + 1 < n && !dones[t] && !truncs[t];
    next_values[t] = continues ? values[t + 1] : v_next(t, 0);
  }
  return compute_gae(rewards, values, next_values, dones, truncs,
                     GaeConfig{cfg_.gamma, cfg_.gae_lambda});
}

LossReport ActorCriticLearner::update() {
  if (!rollout_.full()) {
    throw UsageError("actor-critic update needs a full rollout (" +
                     std::to_string(rollout_.size()) + "/" +
                     std::to_string(rollout_.capacity()) + ")");
  }
  const GaeResult gae = rollout_advantages();
  const auto& items = rollout_.items();
  const int epochs = kind_ == Algo::kPpo ? cfg_.ppo_epochs : 1;
  const PpoLossConfig ppo_cfg{cfg_.ppo_clip, cfg_.value_coef, cfg_.entropy_coef,
                              cfg_.ppo_normalize_advantages};
  const A2cLossConfig a2c_cfg{cfg_.value_coef, cfg_.entropy_coef};

  LossReport sum;
  int steps = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& idx : rollout_.minibatches(cfg_.minibatch_size, rng_)) {
      const auto m = static_cast<Eigen::Index>(idx.size());
      PolicyBatch batch{Matrix(m, obs_dim_), std::vector<int>(m), Vector(m),
                        Vector(m), Vector(m)};
      for (Eigen::Index k = 0; k < m; ++k) {
        const Transition& t = items[idx[k]];
        batch.observations.row(k) = t.observation.transpose();
        batch.actions[k] = t.action;
        batch.old_log_probs[k] = t.log_prob;
        batch.advantages[k] = gae.advantages[idx[k]];
        batch.returns[k] = gae.returns[idx[k]];
      }
      ParamSet pg, vg;
      const LossReport r = kind_ == Algo::kPpo
                               ? ppo_loss(policy_, value_, batch, ppo_cfg, &pg, &vg)
                               : a2c_loss(policy_, value_, batch, a2c_cfg, &pg, &vg);
      const double norm = clip_global_norm({&pg, &vg}, cfg_.grad_norm_clip);
      adam_step(policy_.params(), pg, policy_opt_);
      adam_step(value_.params(), vg, value_opt_);
      sum.policy_loss += r.policy_loss;
      sum.value_loss += r.value_loss;
      sum.entropy += r.entropy;
      sum.total += r.total;
      sum.clip_fraction += r.clip_fraction;
      sum.grad_norm += norm;
      ++steps;
    }
  }
  if (!all_finite(policy_.params()) || !all_finite(value_.params())) {
    throw DivergenceError(std::string(algo_name(kind_)) +
                          " update produced non-finite parameters");
  }
  const double inv = 1.0 / std::max(steps, 1);
  last_loss_ = LossReport{sum.policy_loss * inv, sum.value_loss * inv,
                          sum.entropy * inv,     sum.total * inv,
                          sum.clip_fraction * inv, sum.grad_norm * inv};
  rollout_.clear();
  ++updates_;
  return last_loss_;
}

std::unique_ptr<Learner> ActorCriticLearner::clone() const {
  return std::make_unique<ActorCriticLearner>(*this);
}

void ActorCriticLearner::save(Archive& ar, const std::string& prefix) const {
  Learner::save(ar, prefix);
  put_params(ar, prefix + "/policy", policy_.params());
  put_params(ar, prefix + "/value", value_.params());
  save_adam(ar, prefix + "/policy_opt", policy_opt_);
  save_adam(ar, prefix + "/value_opt", value_opt_);
  save_transitions(ar, prefix + "/rollout", rollout_.items(), obs_dim_);
}

void ActorCriticLearner::load(const Archive& ar, const std::string& prefix) {
  Learner::load(ar, prefix);
  get_params(ar, prefix + "/policy", policy_.params());
  get_params(ar, prefix + "/value", value_.params());
  load_adam(ar, prefix + "/policy_opt", policy_opt_);
  load_adam(ar, prefix + "/value_opt", value_opt_);
  auto items = load_transitions(ar, prefix + "/rollout", obs_dim_);
  if (static_cast<int>(items.size()) > rollout_.capacity()) {
    throw FormatError("checkpoint rollout for '" + prefix + "' exceeds capacity");
  }
  rollout_.clear();
  for (auto& t : items) rollout_.record(std::move(t));
}

// ---------------------------------------------------------------------------

QLearner::QLearner(Algo kind, int obs_dim, int n_actions, const LearnerConfig& cfg,
                   std::uint64_t seed)
    : Learner(kind, obs_dim, n_actions, cfg, seed), replay_(cfg.replay_size) {
  if (kind != Algo::kDqn && kind != Algo::kDdqn) {
    throw UsageError("Q learner must be DQN or DDQN");
  }
  online_ = Mlp::initialized(with_hidden(obs_dim, cfg.hidden, n_actions), rng_);
  target_ = online_;
  opt_ = AdamState(online_.params(), adam_config(cfg, cfg.q_learning_rate));
}

double QLearner::epsilon() const {
  return epsilon_at(EpsilonSchedule{cfg_.epsilon_initial, cfg_.epsilon_final,
                                    cfg_.epsilon_timesteps},
                    own_step_);
}

ActResult QLearner::act(const Vector& obs, ActMode mode) {
  check_obs(obs);
  if (mode == ActMode::kEval) return ActResult{act_greedy(obs), 0.0, 0.0};
  scaler_.update(obs);
  ActResult r;
  if (own_step_ < cfg_.random_timesteps) {
    r.action = static_cast<int>(rng_.uniform_int(n_actions_));
  } else if (rng_.uniform() < epsilon()) {
    r.action = static_cast<int>(rng_.uniform_int(n_actions_));
  } else {
    r.action = argmax(online_.forward(scaler_.normalize(obs)));
  }
  return r;
}

int QLearner::act_greedy(const Vector& obs) const {
  check_obs(obs);
  return argmax(online_.forward(scaler_.normalize(obs)));
}

void QLearner::record(const Transition& t) {
  check_obs(t.observation);
  check_obs(t.next_observation);
  replay_.insert(t);
  ++own_step_;
  if (own_step_ >= cfg_.learning_starts && own_step_ % cfg_.train_frequency == 0) {
    update();
  }
  if (own_step_ % cfg_.target_update_interval == 0) target_ = online_;
}

bool QLearner::update() {
  if (own_step_ < cfg_.learning_starts || replay_.size() < cfg_.q_batch_size) {
    return false;
  }
  const auto idx = replay_.sample_indices(cfg_.q_batch_size, rng_);
  const auto n = static_cast<Eigen::Index>(idx.size());
  QBatch batch{Matrix(n, obs_dim_), std::vector<int>(n), Vector(n),
               Matrix(n, obs_dim_), std::vector<bool>(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Transition& t = replay_.at(idx[k]);
    batch.observations.row(k) = t.observation.transpose();
    batch.next_observations.row(k) = t.next_observation.transpose();
    batch.actions[k] = t.action;
    batch.rewards[k] = t.reward;
    batch.dones[k] = t.done;
  }
  batch.observations = scaler_.normalize(batch.observations);
  batch.next_observations = scaler_.normalize(batch.next_observations);
  const Vector y = q_targets(batch, online_, target_, cfg_.gamma, double_q());
  ParamSet grad;
  const double loss = td_loss(online_, batch, y, &grad);
  adam_step(online_.params(), grad, opt_);
  if (!all_finite(online_.params())) {
    throw DivergenceError(std::string(algo_name(kind_)) +
                          " update produced non-finite parameters");
  }
  last_loss_ = LossReport{};
  last_loss_.value_loss = loss;
  last_loss_.total = loss;
  last_loss_.grad_norm = std::sqrt(squared_norm(grad));
  ++updates_;
  return true;
}

std::unique_ptr<Learner> QLearner::clone() const {
  return std::make_unique<QLearner>(*this);
}

void QLearner::save(Archive& ar, const std::string& prefix) const {
  Learner::save(ar, prefix);
  put_params(ar, prefix + "/online", online_.params());
  put_params(ar, prefix + "/target", target_.params());
  save_adam(ar, prefix + "/opt", opt_);
  std::vector<Transition> items;
  items.reserve(replay_.size());
  for (int i = 0; i < replay_.size(); ++i) items.push_back(replay_.at(i));
  save_transitions(ar, prefix + "/replay", items, obs_dim_);
  ar.put_counter(prefix + "/replay/insertions", replay_.insertions());
}

void QLearner::load(const Archive& ar, const std::string& prefix) {
  Learner::load(ar, prefix);
  get_params(ar, prefix + "/online", online_.params());
  get_params(ar, prefix + "/target", target_.params());
  load_adam(ar, prefix + "/opt", opt_);
  replay_.restore(load_transitions(ar, prefix + "/replay", obs_dim_),
                  ar.counter(prefix + "/replay/insertions"));
}

std::unique_ptr<Learner> make_learner(Algo kind, int obs_dim, int n_actions,
                                      const LearnerConfig& cfg, std::uint64_t seed) {
  switch (kind) {
    case Algo::kPpo:
    case Algo::kA2c:
      return std::make_unique<ActorCriticLearner>(kind, obs_dim, n_actions, cfg, seed);
    case Algo::kDqn:
    case Algo::kDdqn:
      return std::make_unique<QLearner>(kind, obs_dim, n_actions, cfg, seed);
  }
  throw UsageError("unknown learner kind");
}

}  // namespace rpt
