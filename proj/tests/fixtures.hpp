#ifndef RPT_TESTS_FIXTURES_HPP_
#define RPT_TESTS_FIXTURES_HPP_

#include <cstdint>

#include "config.hpp"

namespace rpt::testing {

// Tiny networks and short gates so that every learner updates within a few
// thousand timesteps.
inline RunConfig small_config(Mode mode, std::uint64_t seed,
                              std::int64_t total = 2000) {
  RunConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.total_agent_timesteps = total;
  cfg.learner.hidden = {8, 8};
  cfg.learner.rollout_size = 64;
  cfg.learner.minibatch_size = 16;
  cfg.learner.replay_size = 500;
  cfg.learner.q_batch_size = 16;
  cfg.learner.learning_starts = 200;
  cfg.learner.random_timesteps = 100;
  cfg.learner.epsilon_timesteps = 1000;
  cfg.learner.target_update_interval = 100;
  return cfg;
}

}  // namespace rpt::testing

#endif  // RPT_TESTS_FIXTURES_HPP_
