#ifndef RPT_CONFIG_HPP_
#define RPT_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "arena.hpp"
#include "learners.hpp"

namespace rpt {

enum class Mode { kRpt, kIppo, kDdqnSelfplay };

std::string_view mode_name(Mode mode);  // "rpt", "ippo", "ddqn-selfplay"
Mode parse_mode(std::string_view name);

struct RunConfig {
  Mode mode = Mode::kIppo;
  std::int64_t total_agent_timesteps = 200000;
  std::uint64_t seed = 0;
  std::string output_dir;
  int checkpoint_every = 200;  // episodes
  // Only "active" is implemented: transitions go to the acting learner.
  std::string transition_routing = "active";
  ArenaConfig arena;
  LearnerConfig learner;
};

// Throws ConfigError on invalid values.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace rpt

#endif  // RPT_CONFIG_HPP_
