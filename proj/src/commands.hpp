#ifndef RPT_COMMANDS_HPP_
#define RPT_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "curves.hpp"
#include "evaluation.hpp"

namespace rpt {

// train: fresh run, or continue from resume_path with the budget in cfg.
void command_train(const RunConfig& cfg, const std::string& resume_path = "");

// train-heldout: self-play DDQN run under <out>/heldout_<role>/, then the
// pool file <out>/<role>.ckpt.
void command_train_heldout(Role role, const RunConfig& cfg);

struct EvalOptions {
  std::string target_checkpoint;
  std::string pool_dir;
  int repeats = 20;
  std::uint64_t seed = 0;
  Algo algo = Algo::kPpo;
  std::string target_name;  // defaults to the checkpoint's mode + algo
  std::string output_dir;
};
// eval-mixed: writes eval_episodes.csv, eval_summary.csv and eval_config.json.
EvalReport command_eval_mixed(const EvalOptions& opts);
HeldoutPool load_heldout_pool(const std::string& pool_dir);

struct ReplayOptions {
  std::string checkpoint;
  int episodes = 1;
  std::string trace_path;
  std::uint64_t seed = 0;
  std::optional<Algo> algo;  // default: each slot's active learner
};
// replay: one JSON object per line per step (plus one reset line per episode).
void command_replay(const ReplayOptions& opts);

struct CurveOptions {
  std::vector<std::string> patterns;  // file paths or glob patterns
  int downsample = 1;
  std::int64_t bin_width = 10000;
  std::string label = "curve";
  std::string output_path;
};
std::vector<CurvePoint> command_export_curves(const CurveOptions& opts);

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns);

}  // namespace rpt

#endif  // RPT_COMMANDS_HPP_
