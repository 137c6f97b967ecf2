#include "rpt/rpt.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "arena.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "error.hpp"

struct rpt_config {
  rpt::RunConfig cfg;
};

struct rpt_arena {
  std::unique_ptr<rpt::Arena> arena;
  std::vector<rpt::SpawnConfig> spawns;
};

namespace {

thread_local std::string g_last_error;

rpt_status fail(rpt_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

rpt_status from_kind(rpt::ErrorKind kind) {
  switch (kind) {
    case rpt::ErrorKind::kUsage: return RPT_ERR_USAGE;
    case rpt::ErrorKind::kShape: return RPT_ERR_SHAPE;
    case rpt::ErrorKind::kFormat: return RPT_ERR_FORMAT;
    case rpt::ErrorKind::kIo: return RPT_ERR_IO;
    case rpt::ErrorKind::kConfig: return RPT_ERR_CONFIG;
    case rpt::ErrorKind::kDivergence: return RPT_ERR_DIVERGENCE;
  }
  return RPT_ERR_RUNTIME;
}

template <typename F>
rpt_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return RPT_OK;
  } catch (const rpt::Error& e) {
    return fail(from_kind(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(RPT_ERR_FORMAT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RPT_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(RPT_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(RPT_ERR_RUNTIME, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw rpt::UsageError(what);
}

}  // namespace

extern "C" {

const char* rpt_last_error(void) { return g_last_error.c_str(); }

const char* rpt_status_name(rpt_status status) {
  switch (status) {
    case RPT_OK: return "ok";
    case RPT_ERR_USAGE: return "usage";
    case RPT_ERR_SHAPE: return "shape";
    case RPT_ERR_FORMAT: return "format";
    case RPT_ERR_IO: return "io";
    case RPT_ERR_CONFIG: return "config";
    case RPT_ERR_DIVERGENCE: return "divergence";
    case RPT_ERR_RUNTIME: return "runtime";
  }
  return "unknown";
}

const char* rpt_version(void) { return "1.0.0"; }

rpt_status rpt_config_default(rpt_config** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new rpt_config{};
  });
}

rpt_status rpt_config_load(const char* path, rpt_config** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto cfg = std::make_unique<rpt_config>();
    cfg->cfg = rpt::load_run_config(path);
    *out = cfg.release();
  });
}

rpt_status rpt_config_set(rpt_config* cfg, const char* key, const char* json_value) {
  return guarded([&] {
    require(cfg != nullptr && key != nullptr && json_value != nullptr, "null argument");
    nlohmann::json j = rpt::to_json(cfg->cfg);
    const std::string k = key;
    const auto value = nlohmann::json::parse(json_value);
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      j[k] = value;
    } else {
      const std::string section = k.substr(0, dot);
      require(j.contains(section) && j[section].is_object(),
              ("unknown config section '" + section + "'").c_str());
      j[section][k.substr(dot + 1)] = value;
    }
    rpt::RunConfig next = rpt::run_config_from_json(j);
    cfg->cfg = next;
  });
}

rpt_status rpt_config_save(const rpt_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg != nullptr && path != nullptr, "null argument");
    rpt::save_run_config(cfg->cfg, path);
  });
}

rpt_status rpt_config_to_json(const rpt_config* cfg, char* buf, size_t size, size_t* needed) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    const std::string text = rpt::to_json(cfg->cfg).dump(2);
    if (needed != nullptr) *needed = text.size() + 1;
    if (buf == nullptr) return;
    require(size > text.size(), "buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

void rpt_config_free(rpt_config* cfg) { delete cfg; }

rpt_status rpt_train(const rpt_config* cfg, const char* resume_checkpoint) {
  return guarded([&] {
    require(cfg != nullptr, "null config");
    rpt::command_train(cfg->cfg, resume_checkpoint ? resume_checkpoint : "");
  });
}

rpt_status rpt_train_heldout(const rpt_config* cfg, const char* role) {
  return guarded([&] {
    require(cfg != nullptr && role != nullptr, "null argument");
    rpt::command_train_heldout(rpt::parse_role(role), cfg->cfg);
  });
}

rpt_status rpt_eval_mixed(const rpt_eval_options* opts, rpt_eval_result* result) {
  return guarded([&] {
    require(opts != nullptr && opts->target_checkpoint != nullptr && opts->pool_dir != nullptr &&
                opts->output_dir != nullptr,
            "eval options need target_checkpoint, pool_dir and output_dir");
    rpt::EvalOptions o;
    o.target_checkpoint = opts->target_checkpoint;
    o.pool_dir = opts->pool_dir;
    o.output_dir = opts->output_dir;
    if (opts->algo != nullptr) o.algo = rpt::parse_algo(opts->algo);
    if (opts->target_name != nullptr) o.target_name = opts->target_name;
    if (opts->repeats > 0) o.repeats = opts->repeats;
    o.seed = opts->seed;
    const rpt::EvalReport report = rpt::command_eval_mixed(o);
    if (result != nullptr) {
      result->mean_return = report.episode_return.mean;
      result->ci_low = report.episode_return.low;
      result->ci_high = report.episode_return.high;
      result->capture_rate = report.capture_rate;
      result->episodes = static_cast<int>(report.episodes.size());
    }
  });
}

rpt_status rpt_replay(const char* checkpoint, int episodes, const char* trace_path,
                      uint64_t seed, const char* algo) {
  return guarded([&] {
    require(checkpoint != nullptr && trace_path != nullptr, "null argument");
    rpt::ReplayOptions o;
    o.checkpoint = checkpoint;
    o.episodes = episodes;
    o.trace_path = trace_path;
    o.seed = seed;
    if (algo != nullptr) o.algo = rpt::parse_algo(algo);
    rpt::command_replay(o);
  });
}

rpt_status rpt_export_curves(const char* const* patterns, size_t count, int downsample,
                             int64_t bin_width, const char* label, const char* output_csv) {
  return guarded([&] {
    require(patterns != nullptr && count > 0 && output_csv != nullptr, "null argument");
    rpt::CurveOptions o;
    for (size_t i = 0; i < count; ++i) {
      require(patterns[i] != nullptr, "null pattern");
      o.patterns.emplace_back(patterns[i]);
    }
    o.downsample = downsample;
    o.bin_width = bin_width;
    if (label != nullptr) o.label = label;
    o.output_path = output_csv;
    rpt::command_export_curves(o);
  });
}

rpt_status rpt_arena_create(const rpt_config* cfg, uint64_t seed, rpt_arena** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    const rpt::ArenaConfig ac = cfg ? cfg->cfg.arena : rpt::ArenaConfig{};
    auto a = std::make_unique<rpt_arena>();
    a->arena = std::make_unique<rpt::Arena>(ac, seed);
    a->spawns = rpt::default_spawn_configs(ac);
    *out = a.release();
  });
}

int rpt_arena_team_size(const rpt_arena* arena) {
  return arena ? arena->arena->team_size() : -1;
}

int rpt_arena_observation_dim(const rpt_arena* arena) {
  return arena ? arena->arena->observation_dim() : -1;
}

int rpt_arena_spawn_count(const rpt_arena* arena) {
  return arena ? static_cast<int>(arena->spawns.size()) : -1;
}

namespace {

void copy_observations(const std::vector<rpt::Vector>& obs, double* out, size_t len) {
  if (out == nullptr) return;
  size_t total = 0;
  for (const auto& o : obs) total += static_cast<size_t>(o.size());
  if (len != total) {
    throw rpt::ShapeError("observation buffer holds " + std::to_string(len) + " values, need " +
                          std::to_string(total));
  }
  for (const auto& o : obs) {
    std::memcpy(out, o.data(), sizeof(double) * o.size());
    out += o.size();
  }
}

}  // namespace

rpt_status rpt_arena_reset(rpt_arena* arena, int spawn, double* obs, size_t obs_len) {
  return guarded([&] {
    require(arena != nullptr, "null arena");
    require(spawn >= 0 && spawn < static_cast<int>(arena->spawns.size()),
            "spawn index out of range");
    copy_observations(arena->arena->reset(arena->spawns[spawn]), obs, obs_len);
  });
}

rpt_status rpt_arena_step(rpt_arena* arena, const int* actions, size_t n_actions, double* obs,
                          size_t obs_len, double* rewards, int* done, int* truncated) {
  return guarded([&] {
    require(arena != nullptr && actions != nullptr, "null argument");
    const rpt::Arena& a = *arena->arena;
    if (n_actions != static_cast<size_t>(a.team_size())) {
      throw rpt::ShapeError("got " + std::to_string(n_actions) + " actions for a team of " +
                            std::to_string(a.team_size()));
    }
    const size_t need = static_cast<size_t>(a.team_size()) * a.observation_dim();
    if (obs != nullptr && obs_len != need) {
      throw rpt::ShapeError("observation buffer holds " + std::to_string(obs_len) +
                            " values, need " + std::to_string(need));
    }
    const std::vector<int> acts(actions, actions + n_actions);
    const rpt::StepResult r = arena->arena->step(acts);
    copy_observations(r.observations, obs, obs_len);
    if (rewards != nullptr) {
      for (size_t i = 0; i < r.rewards.size(); ++i) rewards[i] = r.rewards[i];
    }
    if (done != nullptr) *done = r.captured ? 1 : 0;
    if (truncated != nullptr) *truncated = (!r.captured && r.truncs.at(0)) ? 1 : 0;
  });
}

void rpt_arena_free(rpt_arena* arena) { delete arena; }

}  // extern "C"
