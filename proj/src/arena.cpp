#include "arena.hpp"

#include <algorithm>
#include <cstdlib>

#include "error.hpp"

namespace rpt {

namespace {

constexpr int kDx[kHeadingCount] = {0, 0, -1, 1};
constexpr int kDy[kHeadingCount] = {1, -1, 0, 0};

int opposite(int heading) {
  switch (heading) {
    case kUp: return kDown;
    case kDown: return kUp;
    case kLeft: return kRight;
    default: return kLeft;
  }
}

bool in_bounds(Cell c, int grid) {
  return c.x >= 0 && c.y >= 0 && c.x < grid && c.y < grid;
}

}  // namespace

std::string_view role_name(Role role) {
  return role == Role::kObserver ? "observer" : "drone";
}

Role parse_role(std::string_view name) {
  if (name == "observer") return Role::kObserver;
  if (name == "drone") return Role::kDrone;
  throw UsageError("unknown role '" + std::string(name) + "'");
}

int chebyshev(Cell a, Cell b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

std::vector<SpawnConfig> default_spawn_configs(const ArenaConfig& cfg) {
  const int g = cfg.grid;
  const int c = g / 2;
  const int n = static_cast<int>(cfg.team.size());
  if (g < 5) throw UsageError("default spawn configs need a grid of at least 5");
  if (n > 8 || n > g - c) throw UsageError("default spawn configs support at most 8 agents");

  const Cell perimeter[8] = {{0, 0},     {g - 1, g - 1}, {0, g - 1}, {g - 1, 0},
                             {c, 0},     {c, g - 1},     {0, c},     {g - 1, c}};
  std::vector<SpawnConfig> out;

  SpawnConfig corners{"corners-center", {}, {c, c}};
  for (int k = 0; k < n; ++k) corners.agents.push_back(perimeter[k]);
  out.push_back(corners);

  SpawnConfig low{"target-corner-low", {}, {0, 0}};
  SpawnConfig high{"target-corner-high", {}, {g - 1, g - 1}};
  for (int k = 0; k < n; ++k) {
    low.agents.push_back({c + k, c});
    high.agents.push_back({c - k, c});
  }
  out.push_back(low);
  out.push_back(high);

  SpawnConfig edge{"edge-team", {}, {c, g - 1}};
  for (int k = 0; k < n; ++k) edge.agents.push_back({c - n / 2 + k, 0});
  out.push_back(edge);
  return out;
}

const SpawnConfig& curriculum_next(const std::vector<SpawnConfig>& configs,
                                   std::int64_t episode_index) {
  if (configs.empty()) throw UsageError("curriculum has no spawn configs");
  if (episode_index < 0) throw UsageError("negative episode index");
  return configs[static_cast<std::size_t>(episode_index %
                                          static_cast<std::int64_t>(configs.size()))];
}

Arena::Arena(ArenaConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  if (cfg_.grid < 2) throw UsageError("grid must be at least 2x2");
  if (cfg_.team.empty()) throw UsageError("team must have at least one agent");
  if (cfg_.episode_limit <= 0) throw UsageError("episode limit must be positive");
  if (cfg_.drone_energy < 0 || cfg_.drone_move_cost < 0) {
    throw UsageError("drone energy and move cost must be non-negative");
  }
  if (cfg_.observer_radius < 0 || cfg_.drone_radius < 0) {
    throw UsageError("sensing radii must be non-negative");
  }
  if (cfg_.target_persistence < 0.0 || cfg_.target_persistence > 1.0) {
    throw UsageError("target persistence must lie in [0, 1]");
  }
}

int Arena::radius(Role role) const {
  return role == Role::kObserver ? cfg_.observer_radius : cfg_.drone_radius;
}

void Arena::validate(const SpawnConfig& spawn) const {
  if (static_cast<int>(spawn.agents.size()) != team_size()) {
    throw UsageError("spawn config '" + spawn.id + "' places " +
                     std::to_string(spawn.agents.size()) + " agents, team has " +
                     std::to_string(team_size()));
  }
  if (!in_bounds(spawn.target, cfg_.grid)) {
    throw UsageError("spawn config '" + spawn.id + "' puts the target off-grid");
  }
  for (int i = 0; i < team_size(); ++i) {
    if (!in_bounds(spawn.agents[i], cfg_.grid)) {
      throw UsageError("spawn config '" + spawn.id + "' puts agent " +
                       std::to_string(i) + " off-grid");
    }
    for (int j = 0; j < i; ++j) {
      if (spawn.agents[i] == spawn.agents[j]) {
        throw UsageError("spawn config '" + spawn.id + "' reuses a start cell");
      }
    }
    if (role(i) == Role::kDrone && spawn.agents[i] == spawn.target) {
      throw UsageError("spawn config '" + spawn.id + "' starts the target on a drone");
    }
  }
}

std::vector<Vector> Arena::reset(const SpawnConfig& spawn) {
  validate(spawn);
  state_.agents = spawn.agents;
  state_.energy.assign(team_size(), 0);
  for (int i = 0; i < team_size(); ++i) {
    if (role(i) == Role::kDrone) state_.energy[i] = cfg_.drone_energy;
  }
  state_.target = spawn.target;
  state_.heading = static_cast<int>(rng_.uniform_int(kHeadingCount));
  state_.step = 0;
  state_.config_id = spawn.id;
  over_ = false;
  std::vector<Vector> obs;
  for (int i = 0; i < team_size(); ++i) obs.push_back(observation(i));
  return obs;
}

TargetMove Arena::target_step(const WorldState& state, const ArenaConfig& cfg, Rng& rng) {
  TargetMove m;
  m.heading = state.heading;
  m.kept_heading = rng.uniform() < cfg.target_persistence;
  if (!m.kept_heading) m.heading = static_cast<int>(rng.uniform_int(kHeadingCount));
  Cell next{state.target.x + kDx[m.heading], state.target.y + kDy[m.heading]};
  if (!in_bounds(next, cfg.grid)) {
    m.heading = opposite(m.heading);
    next = {state.target.x + kDx[m.heading], state.target.y + kDy[m.heading]};
  }
  m.cell = next;
  return m;
}

StepResult Arena::step(const std::vector<int>& actions) {
  if (over_) throw UsageError("step called on a finished episode; reset first");
  if (static_cast<int>(actions.size()) != team_size()) {
    throw UsageError("step needs one action per agent");
  }
  for (int a : actions) {
    if (a < 0 || a >= kMoveCount) {
      throw UsageError("invalid action index " + std::to_string(a));
    }
  }

  StepResult r;
  r.moved.assign(team_size(), false);
  for (int i = 0; i < team_size(); ++i) {
    const int a = actions[i];
    if (a == kStay) continue;
    if (role(i) == Role::kDrone) {
      if (state_.energy[i] < cfg_.drone_move_cost || state_.energy[i] == 0) continue;
      state_.energy[i] -= cfg_.drone_move_cost;
    }
    r.moved[i] = true;
    Cell& c = state_.agents[i];
    c.x = std::clamp(c.x + kDx[a], 0, cfg_.grid - 1);
    c.y = std::clamp(c.y + kDy[a], 0, cfg_.grid - 1);
  }

  auto drone_on_target = [&] {
    for (int i = 0; i < team_size(); ++i) {
      if (role(i) == Role::kDrone && state_.agents[i] == state_.target) return true;
    }
    return false;
  };

  r.captured = drone_on_target();
  if (!r.captured) {
    const TargetMove m = target_step(state_, cfg_, rng_);
    state_.target = m.cell;
    state_.heading = m.heading;
    r.captured = drone_on_target();
  }
  state_.step += 1;

  for (int i = 0; i < team_size(); ++i) {
    if (role(i) == Role::kObserver &&
        chebyshev(state_.agents[i], state_.target) <= cfg_.observer_radius) {
      r.observed = true;
      break;
    }
  }

  double reward = -cfg_.step_penalty;
  if (r.observed) reward += cfg_.observation_bonus;
  if (r.captured) reward += cfg_.capture_reward;
  const bool truncated = !r.captured && state_.step >= cfg_.episode_limit;
  over_ = r.captured || truncated;

  r.rewards.assign(team_size(), reward);
  r.dones.assign(team_size(), r.captured);
  r.truncs.assign(team_size(), truncated);
  for (int i = 0; i < team_size(); ++i) r.observations.push_back(observation(i));
  return r;
}

Visibility Arena::visibility(int agent) const {
  const Cell a = state_.agents.at(agent);
  Visibility v;
  if (chebyshev(a, state_.target) <= radius(role(agent))) {
    v.visible = true;
    v.dx = static_cast<double>(state_.target.x - a.x) / cfg_.grid;
    v.dy = static_cast<double>(state_.target.y - a.y) / cfg_.grid;
  }
  return v;
}

Vector Arena::observation(int agent) const {
  const double g = cfg_.grid;
  const Cell self = state_.agents.at(agent);
  Vector o(observation_dim());
  int k = 0;
  o[k++] = self.x / g;
  o[k++] = self.y / g;
  if (role(agent) == Role::kDrone) {
    o[k++] = cfg_.drone_energy > 0
                 ? static_cast<double>(state_.energy[agent]) / cfg_.drone_energy
                 : 0.0;
  } else {
    o[k++] = 1.0;
  }
  o[k++] = role(agent) == Role::kObserver ? 1.0 : 0.0;
  o[k++] = role(agent) == Role::kDrone ? 1.0 : 0.0;
  const Visibility v = visibility(agent);
  o[k++] = v.visible ? 1.0 : 0.0;
  o[k++] = v.dx;
  o[k++] = v.dy;
  for (int j = 0; j < team_size(); ++j) {
    if (j == agent) continue;
    o[k++] = (state_.agents[j].x - self.x) / g;
    o[k++] = (state_.agents[j].y - self.y) / g;
    o[k++] = role(j) == Role::kDrone ? 1.0 : 0.0;
  }
  o[k++] = static_cast<double>(cfg_.episode_limit - state_.step) / cfg_.episode_limit;
  return o;
}

}  // namespace rpt
