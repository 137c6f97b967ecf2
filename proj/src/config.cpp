#include "config.hpp"

#include <fstream>
#include <set>

#include "error.hpp"

namespace rpt {

using nlohmann::json;

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kRpt: return "rpt";
    case Mode::kIppo: return "ippo";
    case Mode::kDdqnSelfplay: return "ddqn-selfplay";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  if (name == "rpt") return Mode::kRpt;
  if (name == "ippo") return Mode::kIppo;
  if (name == "ddqn-selfplay") return Mode::kDdqnSelfplay;
  throw UsageError("unknown mode '" + std::string(name) + "'");
}

namespace {

template <typename A, typename F>
void arena_fields(A& a, F&& f) {
  f("grid", a.grid);
  f("observer_radius", a.observer_radius);
  f("drone_radius", a.drone_radius);
  f("drone_energy", a.drone_energy);
  f("drone_move_cost", a.drone_move_cost);
  f("target_persistence", a.target_persistence);
  f("episode_limit", a.episode_limit);
  f("capture_reward", a.capture_reward);
  f("step_penalty", a.step_penalty);
  f("observation_bonus", a.observation_bonus);
}

template <typename L, typename F>
void learner_fields(L& l, F&& f) {
  f("hidden", l.hidden);
  f("gamma", l.gamma);
  f("policy_learning_rate", l.policy_learning_rate);
  f("rollout_size", l.rollout_size);
  f("minibatch_size", l.minibatch_size);
  f("gae_lambda", l.gae_lambda);
  f("grad_norm_clip", l.grad_norm_clip);
  f("entropy_coef", l.entropy_coef);
  f("ppo_epochs", l.ppo_epochs);
  f("ppo_clip", l.ppo_clip);
  f("value_coef", l.value_coef);
  f("ppo_normalize_advantages", l.ppo_normalize_advantages);
  f("q_learning_rate", l.q_learning_rate);
  f("replay_size", l.replay_size);
  f("q_batch_size", l.q_batch_size);
  f("epsilon_initial", l.epsilon_initial);
  f("epsilon_final", l.epsilon_final);
  f("epsilon_timesteps", l.epsilon_timesteps);
  f("learning_starts", l.learning_starts);
  f("random_timesteps", l.random_timesteps);
  f("target_update_interval", l.target_update_interval);
  f("train_frequency", l.train_frequency);
  f("adam_beta1", l.adam_beta1);
  f("adam_beta2", l.adam_beta2);
  f("adam_epsilon", l.adam_epsilon);
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + where + key + "': " + e.what());
  }
}

}  // namespace

void validate(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.total_agent_timesteps > 0, "total_agent_timesteps must be positive");
  require(cfg.checkpoint_every > 0, "checkpoint_every must be positive");
  if (cfg.transition_routing != "active") {
    throw ConfigError("transition_routing '" + cfg.transition_routing +
                      "' is not supported; only 'active' routing is implemented");
  }
  const ArenaConfig& a = cfg.arena;
  require(a.grid >= 5, "arena.grid must be at least 5");
  require(!a.team.empty(), "arena.team must not be empty");
  require(a.episode_limit > 0, "arena.episode_limit must be positive");
  require(a.drone_energy >= 0 && a.drone_move_cost >= 0, "arena energy values must be >= 0");
  require(a.observer_radius >= 0 && a.drone_radius >= 0, "arena radii must be >= 0");
  require(a.target_persistence >= 0.0 && a.target_persistence <= 1.0,
          "arena.target_persistence must lie in [0, 1]");
  const LearnerConfig& l = cfg.learner;
  require(!l.hidden.empty(), "learner.hidden must list at least one layer");
  for (int h : l.hidden) require(h > 0, "learner.hidden widths must be positive");
  require(l.gamma >= 0.0 && l.gamma < 1.0, "learner.gamma must lie in [0, 1)");
  require(l.gae_lambda >= 0.0 && l.gae_lambda <= 1.0, "learner.gae_lambda must lie in [0, 1]");
  require(l.rollout_size > 0 && l.minibatch_size > 0, "rollout and minibatch sizes must be positive");
  require(l.minibatch_size <= l.rollout_size, "minibatch_size must not exceed rollout_size");
  require(l.grad_norm_clip > 0.0, "learner.grad_norm_clip must be positive");
  require(l.ppo_epochs > 0, "learner.ppo_epochs must be positive");
  require(l.ppo_clip > 0.0, "learner.ppo_clip must be positive");
  require(l.replay_size > 0 && l.q_batch_size > 0, "replay and batch sizes must be positive");
  require(l.epsilon_timesteps > 0, "learner.epsilon_timesteps must be positive");
  require(l.epsilon_initial >= l.epsilon_final, "epsilon must not increase");
  require(l.learning_starts >= 0 && l.random_timesteps >= 0, "learner step gates must be >= 0");
  require(l.target_update_interval > 0 && l.train_frequency > 0,
          "target_update_interval and train_frequency must be positive");
  require(l.policy_learning_rate > 0.0 && l.q_learning_rate > 0.0, "learning rates must be positive");
}

json to_json(const RunConfig& cfg) {
  json arena = json::object();
  arena_fields(cfg.arena, [&](const char* k, const auto& v) { arena[k] = v; });
  json team = json::array();
  for (Role r : cfg.arena.team) team.push_back(std::string(role_name(r)));
  arena["team"] = team;

  json learner = json::object();
  learner_fields(cfg.learner, [&](const char* k, const auto& v) { learner[k] = v; });

  json j = json::object();
  j["mode"] = std::string(mode_name(cfg.mode));
  j["total_agent_timesteps"] = cfg.total_agent_timesteps;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["transition_routing"] = cfg.transition_routing;
  j["arena"] = arena;
  j["learner"] = learner;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  reject_unknown(j,
                 {"mode", "total_agent_timesteps", "seed", "output_dir",
                  "checkpoint_every", "transition_routing", "arena", "learner"},
                 "");
  if (j.contains("mode")) {
    std::string mode;
    read_field(j, "mode", mode, "");
    try {
      cfg.mode = parse_mode(mode);
    } catch (const UsageError& e) {
      throw ConfigError(e.what());
    }
  }
  read_field(j, "total_agent_timesteps", cfg.total_agent_timesteps, "");
  read_field(j, "seed", cfg.seed, "");
  read_field(j, "output_dir", cfg.output_dir, "");
  read_field(j, "checkpoint_every", cfg.checkpoint_every, "");
  read_field(j, "transition_routing", cfg.transition_routing, "");

  if (j.contains("arena")) {
    const json& a = j.at("arena");
    std::set<std::string> known{"team"};
    arena_fields(cfg.arena, [&](const char* k, auto&) { known.insert(k); });
    reject_unknown(a, known, "arena.");
    arena_fields(cfg.arena, [&](const char* k, auto& v) { read_field(a, k, v, "arena."); });
    if (a.contains("team")) {
      std::vector<std::string> names;
      read_field(a, "team", names, "arena.");
      cfg.arena.team.clear();
      for (const auto& n : names) {
        try {
          cfg.arena.team.push_back(parse_role(n));
        } catch (const UsageError& e) {
          throw ConfigError(std::string("arena.team: ") + e.what());
        }
      }
    }
  }
  if (j.contains("learner")) {
    const json& l = j.at("learner");
    std::set<std::string> known;
    learner_fields(cfg.learner, [&](const char* k, auto&) { known.insert(k); });
    reject_unknown(l, known, "learner.");
    learner_fields(cfg.learner, [&](const char* k, auto& v) { read_field(l, k, v, "learner."); });
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config: " + path);
  out << to_json(cfg).dump(2) << "\n";
  if (!out) throw IoError("failed writing config: " + path);
}

}  // namespace rpt
