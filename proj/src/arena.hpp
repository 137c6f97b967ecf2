#ifndef RPT_ARENA_HPP_
#define RPT_ARENA_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "numeric.hpp"
#include "rng.hpp"

namespace rpt {

enum class Role { kObserver = 0, kDrone = 1 };

std::string_view role_name(Role role);  // "observer" / "drone"
Role parse_role(std::string_view name);

// Discrete moves. Up increases y.
enum Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
inline constexpr int kMoveCount = 5;
inline constexpr int kHeadingCount = 4;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

int chebyshev(Cell a, Cell b);

struct ArenaConfig {
  int grid = 15;
  int observer_radius = 6;
  int drone_radius = 2;
  int drone_energy = 200;
  int drone_move_cost = 1;
  double target_persistence = 0.8;
  int episode_limit = 256;
  double capture_reward = 100.0;
  double step_penalty = 0.05;
  double observation_bonus = 0.5;
  std::vector<Role> team = {Role::kObserver, Role::kDrone};
};

struct SpawnConfig {
  std::string id;
  std::vector<Cell> agents;  // one per team slot
  Cell target;
};

// Default curriculum: team in distinct corners with the target centered,
// target in each of two opposite corners, and the team lined up on one edge.
std::vector<SpawnConfig> default_spawn_configs(const ArenaConfig& cfg);

// config[episode mod K]; throws UsageError when configs is empty.
const SpawnConfig& curriculum_next(const std::vector<SpawnConfig>& configs,
                                   std::int64_t episode_index);

struct WorldState {
  std::vector<Cell> agents;
  std::vector<int> energy;  // observers carry 0 and never spend it
  Cell target;
  int heading = 0;
  int step = 0;
  std::string config_id;
};

struct Visibility {
  bool visible = false;
  double dx = 0.0;  // (target - agent) / grid when visible
  double dy = 0.0;
};

struct TargetMove {
  Cell cell;
  int heading = 0;
  bool kept_heading = false;  // persistence branch taken
};

struct StepResult {
  std::vector<Vector> observations;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::vector<bool> truncs;
  bool captured = false;
  bool observed = false;
  std::vector<bool> moved;  // executed non-stay move per agent
};

// Grid pursuit arena: observers sense the target from afar, drones sense it
// only nearby but capture by entering its cell. Team rewards are shared.
class Arena {
 public:
  Arena(ArenaConfig cfg, std::uint64_t seed);

  const ArenaConfig& config() const { return cfg_; }
  int team_size() const { return static_cast<int>(cfg_.team.size()); }
  Role role(int agent) const { return cfg_.team.at(agent); }
  int observation_dim() const { return observation_dim(team_size()); }
  static int observation_dim(int team_size) { return 9 + 3 * (team_size - 1); }
  int radius(Role role) const;

  std::vector<Vector> reset(const SpawnConfig& spawn);
  StepResult step(const std::vector<int>& actions);

  Visibility visibility(int agent) const;
  Vector observation(int agent) const;
  const WorldState& state() const { return state_; }
  bool episode_over() const { return over_; }

  // Target dynamics on an arbitrary state; exposed for testing.
  static TargetMove target_step(const WorldState& state, const ArenaConfig& cfg,
                                Rng& rng);

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Throws UsageError describing the first problem.
  void validate(const SpawnConfig& spawn) const;

 private:
  ArenaConfig cfg_;
  Rng rng_;
  WorldState state_;
  bool over_ = true;
};

}  // namespace rpt

#endif  // RPT_ARENA_HPP_
