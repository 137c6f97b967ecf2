#ifndef RPT_RPT_H_
#define RPT_RPT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(RPT_BUILDING_LIBRARY)
#define RPT_API __attribute__((visibility("default")))
#else
#define RPT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rpt_status {
  RPT_OK = 0,
  RPT_ERR_USAGE = 1,       /* bad argument or call order */
  RPT_ERR_SHAPE = 2,       /* dimension mismatch */
  RPT_ERR_FORMAT = 3,      /* malformed checkpoint, CSV or JSON */
  RPT_ERR_IO = 4,          /* file system failure */
  RPT_ERR_CONFIG = 5,      /* invalid configuration value */
  RPT_ERR_DIVERGENCE = 6,  /* non-finite parameters after an update */
  RPT_ERR_RUNTIME = 7      /* anything else */
} rpt_status;

/* Message for the last failing call on this thread; never NULL. */
RPT_API const char* rpt_last_error(void);
RPT_API const char* rpt_status_name(rpt_status status);
RPT_API const char* rpt_version(void);

/* ---- run configuration ---- */

typedef struct rpt_config rpt_config;

RPT_API rpt_status rpt_config_default(rpt_config** out);
RPT_API rpt_status rpt_config_load(const char* path, rpt_config** out);
/* Overrides one key. `key` is "mode", "seed", "total_agent_timesteps",
   "output_dir", ... or "arena.<field>" / "learner.<field>"; `json_value` is a
   JSON literal such as "7", "\"ippo\"" or "[\"observer\",\"drone\"]". */
RPT_API rpt_status rpt_config_set(rpt_config* cfg, const char* key, const char* json_value);
RPT_API rpt_status rpt_config_save(const rpt_config* cfg, const char* path);
/* Writes the resolved config as JSON into buf (NUL-terminated). *needed
   receives the full length including the terminator. */
RPT_API rpt_status rpt_config_to_json(const rpt_config* cfg, char* buf, size_t size,
                                      size_t* needed);
RPT_API void rpt_config_free(rpt_config* cfg);

/* ---- commands ---- */

/* resume_checkpoint may be NULL for a fresh run. */
RPT_API rpt_status rpt_train(const rpt_config* cfg, const char* resume_checkpoint);
/* role: "observer" or "drone". */
RPT_API rpt_status rpt_train_heldout(const rpt_config* cfg, const char* role);

typedef struct rpt_eval_options {
  const char* target_checkpoint;
  const char* pool_dir;
  const char* output_dir;
  const char* algo;         /* NULL means "ppo" */
  const char* target_name;  /* NULL derives one from the checkpoint */
  int repeats;              /* <= 0 means 20 */
  uint64_t seed;
} rpt_eval_options;

typedef struct rpt_eval_result {
  double mean_return;
  double ci_low;
  double ci_high;
  double capture_rate;
  int episodes;
} rpt_eval_result;

/* result may be NULL. */
RPT_API rpt_status rpt_eval_mixed(const rpt_eval_options* opts, rpt_eval_result* result);

/* algo may be NULL to replay each slot's active learner. */
RPT_API rpt_status rpt_replay(const char* checkpoint, int episodes, const char* trace_path,
                              uint64_t seed, const char* algo);

RPT_API rpt_status rpt_export_curves(const char* const* patterns, size_t count,
                                     int downsample, int64_t bin_width, const char* label,
                                     const char* output_csv);

/* ---- arena ---- */

typedef struct rpt_arena rpt_arena;

/* cfg may be NULL for the default arena. */
RPT_API rpt_status rpt_arena_create(const rpt_config* cfg, uint64_t seed, rpt_arena** out);
RPT_API int rpt_arena_team_size(const rpt_arena* arena);
RPT_API int rpt_arena_observation_dim(const rpt_arena* arena);
RPT_API int rpt_arena_spawn_count(const rpt_arena* arena);
/* Resets to spawn configuration `spawn`. obs receives team_size * obs_dim
   values, agent-major. */
RPT_API rpt_status rpt_arena_reset(rpt_arena* arena, int spawn, double* obs, size_t obs_len);
/* actions: team_size entries. rewards may be NULL. *done / *truncated may be
   NULL. */
RPT_API rpt_status rpt_arena_step(rpt_arena* arena, const int* actions, size_t n_actions,
                                  double* obs, size_t obs_len, double* rewards, int* done,
                                  int* truncated);
RPT_API void rpt_arena_free(rpt_arena* arena);

#ifdef __cplusplus
}
#endif

#endif /* RPT_RPT_H_ */
