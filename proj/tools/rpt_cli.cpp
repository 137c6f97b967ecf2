// rpt: command-line front end over the librpt C API.
#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rpt/rpt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int report(rpt_status status, const char* what) {
  if (status == RPT_OK) return kExitOk;
  std::fprintf(stderr, "rpt %s: %s error: %s\n", what, rpt_status_name(status),
               rpt_last_error());
  return (status == RPT_ERR_USAGE || status == RPT_ERR_CONFIG) ? kExitUsage : kExitRuntime;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Shared flags of the training commands.
struct RunFlags {
  std::string mode;
  long long timesteps = 0;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  int checkpoint_every = 0;
  CLI::Option* mode_opt = nullptr;
  CLI::Option* timesteps_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* every_opt = nullptr;

  void add(CLI::App* cmd, bool with_mode) {
    if (with_mode) {
      mode_opt = cmd->add_option("--mode", mode, "Training scheme")
                     ->check(CLI::IsMember({"rpt", "ippo", "ddqn-selfplay"}));
    }
    timesteps_opt = cmd->add_option("--timesteps", timesteps, "Agent-timestep budget")
                        ->check(CLI::PositiveNumber);
    seed_opt = cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--config", config, "JSON run config")->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output directory")->required();
    every_opt = cmd->add_option("--checkpoint-every", checkpoint_every,
                                "Checkpoint interval in episodes")
                    ->check(CLI::PositiveNumber);
  }

  // Config file first, then explicit flags on top.
  rpt_status build(rpt_config** cfg) const {
    rpt_status s = config.empty() ? rpt_config_default(cfg) : rpt_config_load(config.c_str(), cfg);
    if (s != RPT_OK) return s;
    auto set = [&](const char* key, const std::string& value) {
      if (s == RPT_OK) s = rpt_config_set(*cfg, key, value.c_str());
    };
    if (mode_opt != nullptr && mode_opt->count() > 0) set("mode", quoted(mode));
    if (timesteps_opt->count() > 0) set("total_agent_timesteps", std::to_string(timesteps));
    if (seed_opt->count() > 0) set("seed", std::to_string(seed));
    if (every_opt->count() > 0) set("checkpoint_every", std::to_string(checkpoint_every));
    set("output_dir", quoted(out));
    if (s != RPT_OK) {
      rpt_config_free(*cfg);
      *cfg = nullptr;
    }
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotating policy training for heterogeneous pursuit teams", "rpt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rpt_version()));

  RunFlags train;
  std::string resume;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a team (RPT, IPPO or DDQN self-play)");
  train.add(train_cmd, true);
  train_cmd->add_option("--resume", resume, "Continue from a checkpoint")
      ->check(CLI::ExistingFile);

  RunFlags heldout;
  std::string role;
  CLI::App* heldout_cmd =
      app.add_subcommand("train-heldout", "Train a held-out DDQN partner for one role");
  heldout_cmd->add_option("--role", role, "Partner role")
      ->required()
      ->check(CLI::IsMember({"observer", "drone"}));
  heldout.add(heldout_cmd, false);

  std::string target, pool, eval_out, eval_algo = "ppo", eval_name;
  int repeats = 20;
  std::uint64_t eval_seed = 0;
  CLI::App* eval_cmd =
      app.add_subcommand("eval-mixed", "Evaluate a policy with held-out DDQN partners");
  eval_cmd->add_option("--target", target, "Checkpoint of the evaluated run")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--pool", pool, "Directory with observer.ckpt / drone.ckpt")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--repeats", repeats, "Episodes per (slot, spawn config)")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");
  eval_cmd->add_option("--algo", eval_algo, "Learner of the target pool to evaluate")
      ->check(CLI::IsMember({"ppo", "a2c", "dqn", "ddqn"}));
  eval_cmd->add_option("--name", eval_name, "Target label in the CSVs");
  eval_cmd->add_option("--out", eval_out, "Output directory")->required();

  std::string ckpt, trace, replay_algo;
  int episodes = 1;
  std::uint64_t replay_seed = 0;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Write greedy episode traces as JSON lines");
  replay_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--episodes", episodes, "Episodes to play")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--trace", trace, "Output trace path")->required();
  replay_cmd->add_option("--seed", replay_seed, "Arena seed");
  replay_cmd->add_option("--algo", replay_algo, "Learner to replay (default: active)")
      ->check(CLI::IsMember({"ppo", "a2c", "dqn", "ddqn"}));

  std::vector<std::string> logs;
  int downsample = 1;
  long long bin_width = 10000;
  std::string label = "curve", curves_out;
  CLI::App* curves_cmd =
      app.add_subcommand("export-curves", "Aggregate metrics logs into a curve CSV");
  curves_cmd->add_option("--logs", logs, "Metrics CSV paths or glob patterns")->required();
  curves_cmd->add_option("--downsample", downsample, "Timestep downsample factor")
      ->check(CLI::PositiveNumber);
  curves_cmd->add_option("--bin-width", bin_width, "Bin width in agent timesteps")
      ->check(CLI::PositiveNumber);
  curves_cmd->add_option("--label", label, "Series label");
  curves_cmd->add_option("--out", curves_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << "\n" << app.help();
    return kExitUsage;
  }

  if (*train_cmd || *heldout_cmd) {
    const bool is_train = static_cast<bool>(*train_cmd);
    RunFlags& flags = is_train ? train : heldout;
    rpt_config* cfg = nullptr;
    rpt_status s = flags.build(&cfg);
    if (s != RPT_OK) return report(s, "config");
    if (is_train) {
      s = rpt_train(cfg, resume.empty() ? nullptr : resume.c_str());
    } else {
      s = rpt_train_heldout(cfg, role.c_str());
    }
    rpt_config_free(cfg);
    return report(s, is_train ? "train" : "train-heldout");
  }

  if (*eval_cmd) {
    rpt_eval_options opts{};
    opts.target_checkpoint = target.c_str();
    opts.pool_dir = pool.c_str();
    opts.output_dir = eval_out.c_str();
    opts.algo = eval_algo.c_str();
    opts.target_name = eval_name.empty() ? nullptr : eval_name.c_str();
    opts.repeats = repeats;
    opts.seed = eval_seed;
    rpt_eval_result result{};
    const rpt_status s = rpt_eval_mixed(&opts, &result);
    if (s == RPT_OK) {
      std::printf("episodes %d  mean return %.3f  95%% CI [%.3f, %.3f]  capture rate %.3f\n",
                  result.episodes, result.mean_return, result.ci_low, result.ci_high,
                  result.capture_rate);
    }
    return report(s, "eval-mixed");
  }

  if (*replay_cmd) {
    return report(rpt_replay(ckpt.c_str(), episodes, trace.c_str(), replay_seed,
                             replay_algo.empty() ? nullptr : replay_algo.c_str()),
                  "replay");
  }

  std::vector<const char*> patterns;
  for (const auto& l : logs) patterns.push_back(l.c_str());
  return report(rpt_export_curves(patterns.data(), patterns.size(), downsample, bin_width,
                                  label.c_str(), curves_out.c_str()),
                "export-curves");
}
