#include "commands.hpp"

#include <glob.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "error.hpp"
#include "trainer.hpp"

namespace rpt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

void command_train(const RunConfig& cfg, const std::string& resume_path) {
  validate(cfg);
  if (cfg.output_dir.empty()) throw UsageError("train needs an output directory");
  std::unique_ptr<Trainer> trainer;
  if (resume_path.empty()) {
    trainer = std::make_unique<Trainer>(cfg);
  } else {
    trainer = Trainer::from_checkpoint(resume_path);
    if (trainer->config().mode != cfg.mode) {
      throw UsageError("resume checkpoint was trained in mode " +
                       std::string(mode_name(trainer->config().mode)));
    }
    trainer->set_total_agent_timesteps(cfg.total_agent_timesteps);
    trainer->set_output_dir(cfg.output_dir);
  }
  trainer->run();
}

void command_train_heldout(Role role, const RunConfig& cfg) {
  if (cfg.output_dir.empty()) throw UsageError("train-heldout needs an output directory");
  RunConfig run = cfg;
  run.mode = Mode::kDdqnSelfplay;
  run.output_dir = (fs::path(cfg.output_dir) / ("heldout_" + std::string(role_name(role)))).string();
  HeldoutResult result = train_heldout_ddqn(role, run);
  result.trainer->write_checkpoint(
      (fs::path(cfg.output_dir) / (std::string(role_name(role)) + ".ckpt")).string());
}

HeldoutPool load_heldout_pool(const std::string& pool_dir) {
  HeldoutPool pool;
  for (Role role : {Role::kObserver, Role::kDrone}) {
    const fs::path path = fs::path(pool_dir) / (std::string(role_name(role)) + ".ckpt");
    if (!fs::exists(path)) continue;
    auto trainer = Trainer::from_checkpoint(path.string());
    bool found = false;
    for (const auto& slot : trainer->slots()) {
      if (slot.role == role && slot.find(Algo::kDdqn) != nullptr) {
        pool[role] = std::make_shared<FrozenPolicy>(trainer->frozen(slot.id, Algo::kDdqn));
        found = true;
        break;
      }
    }
    if (!found) {
      throw UsageError(path.string() + " holds no DDQN " + std::string(role_name(role)) +
                       " policy");
    }
  }
  return pool;
}

EvalReport command_eval_mixed(const EvalOptions& opts) {
  if (opts.output_dir.empty()) throw UsageError("eval-mixed needs an output directory");
  auto target = Trainer::from_checkpoint(opts.target_checkpoint);
  const HeldoutPool pool = load_heldout_pool(opts.pool_dir);
  const std::string name =
      opts.target_name.empty()
          ? std::string(mode_name(target->config().mode)) + "-" + std::string(algo_name(opts.algo))
          : opts.target_name;
  const ArenaConfig& arena = target->config().arena;
  EvalReport report =
      evaluate_mixed_team(name, frozen_policies(*target, opts.algo), pool, arena,
                          default_spawn_configs(arena), opts.repeats, opts.seed);

  ensure_dir(opts.output_dir);
  const fs::path dir(opts.output_dir);
  write_eval_csv(report, (dir / "eval_episodes.csv").string());
  write_eval_summary_csv(report, (dir / "eval_summary.csv").string());
  write_json(json{{"command", "eval-mixed"},
                  {"target", opts.target_checkpoint},
                  {"target_name", name},
                  {"pool", opts.pool_dir},
                  {"repeats", opts.repeats},
                  {"seed", opts.seed},
                  {"algo", std::string(algo_name(opts.algo))},
                  {"arena", to_json(target->config())["arena"]}},
             (dir / "eval_config.json").string());
  return report;
}

void command_replay(const ReplayOptions& opts) {
  if (opts.episodes <= 0) throw UsageError("replay needs a positive episode count");
  auto trainer = Trainer::from_checkpoint(opts.checkpoint);
  std::vector<PolicyPtr> team;
  for (const auto& slot : trainer->slots()) {
    const Algo kind = opts.algo.value_or(slot.active_learner().kind());
    team.push_back(std::make_shared<FrozenPolicy>(trainer->frozen(slot.id, kind)));
  }
  ensure_parent(opts.trace_path);
  std::ofstream out(opts.trace_path, std::ios::trunc);
  if (!out) throw IoError("cannot write trace " + opts.trace_path);

  auto cells = [](const std::vector<Cell>& cs) {
    json a = json::array();
    for (const Cell& c : cs) a.push_back({c.x, c.y});
    return a;
  };
  const ArenaConfig& arena = trainer->config().arena;
  const auto configs = default_spawn_configs(arena);
  for (int ep = 0; ep < opts.episodes; ++ep) {
    const SpawnConfig& spawn = curriculum_next(configs, ep);
    out << json{{"episode", ep},
                {"step", 0},
                {"spawn_config", spawn.id},
                {"agents", cells(spawn.agents)},
                {"target", {spawn.target.x, spawn.target.y}}}
               .dump()
        << "\n";
    int step = 0;
    play_episode(team, arena, spawn, derive_seed(opts.seed, static_cast<std::uint64_t>(ep)),
                 [&](const Arena& a, const std::vector<int>& actions, const StepResult& r) {
                   ++step;
                   out << json{{"episode", ep},
                               {"step", step},
                               {"agents", cells(a.state().agents)},
                               {"target", {a.state().target.x, a.state().target.y}},
                               {"actions", actions},
                               {"reward", r.rewards[0]},
                               {"done", static_cast<bool>(r.dones[0])},
                               {"truncated", static_cast<bool>(r.truncs[0])}}
                              .dump()
                       << "\n";
                 });
  }
  if (!out) throw IoError("failed writing trace " + opts.trace_path);
  json algo = opts.algo ? json(std::string(algo_name(*opts.algo))) : json("active");
  write_json(json{{"command", "replay"},
                  {"checkpoint", opts.checkpoint},
                  {"episodes", opts.episodes},
                  {"seed", opts.seed},
                  {"algo", algo}},
             opts.trace_path + ".config.json");
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw IoError("no files match '" + p + "'");
    if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("cannot expand '" + p + "'");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CurvePoint> command_export_curves(const CurveOptions& opts) {
  if (opts.output_path.empty()) throw UsageError("export-curves needs an output path");
  std::vector<std::vector<LoggedEpisode>> logs;
  const auto paths = expand_globs(opts.patterns);
  for (const auto& path : paths) logs.push_back(read_metrics_csv(path));
  const auto points = aggregate_curves(logs, opts.bin_width, opts.downsample, opts.label);
  ensure_parent(opts.output_path);
  write_curves_csv(points, opts.output_path);
  write_json(json{{"command", "export-curves"},
                  {"logs", paths},
                  {"downsample", opts.downsample},
                  {"bin_width", opts.bin_width},
                  {"label", opts.label}},
             opts.output_path + ".config.json");
  return points;
}

}  // namespace rpt
