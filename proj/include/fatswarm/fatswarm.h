/*
 * C interface to the fatswarm library.
 *
 * Every function returns an fs_status. On failure the message of the most
 * recent error on the calling thread is available from fs_last_error().
 * Handles are opaque and must be released with the matching *_free call;
 * passing NULL to a free function is a no-op.
 */
#ifndef FATSWARM_H
#define FATSWARM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FS_API __declspec(dllexport)
#elif defined(__GNUC__)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
  FS_OK = 0,
  FS_ERR_INVALID_ARGUMENT = 1,
  FS_ERR_VIEWER_INSIDE_OCCLUDER = 2,
  FS_ERR_VIEWER_INSIDE_DISK = 3,
  FS_ERR_OVERLAPPING_DISKS = 4,
  FS_ERR_INDEX_OUT_OF_RANGE = 5,
  FS_ERR_DIMENSION_MISMATCH = 6,
  FS_ERR_SHAPE_MISMATCH = 7,
  FS_ERR_PLACEMENT_FAILURE = 8,
  FS_ERR_NO_FORWARD_RECORDED = 9,
  FS_ERR_EMPTY_INITIAL_SET = 10,
  FS_ERR_NON_FINITE_LOSS = 11,
  FS_ERR_DISCOVERY_FAILURE = 12,
  FS_ERR_CONFIG_PARSE = 13,
  FS_ERR_IO = 14,
  FS_ERR_UNKNOWN_EXPERIMENT = 15,
  FS_ERR_MISSING_CHECKPOINT = 16,
  FS_ERR_PARSE_FAILURE = 17,
  FS_ERR_NULL_ARGUMENT = 18,
  FS_ERR_BUFFER_TOO_SMALL = 19,
  FS_ERR_INTERNAL = 99
} fs_status;

/* Step status reported by fs_env_step. */
enum { FS_STEP_RUNNING = 0, FS_STEP_FAILURE = 1, FS_STEP_TRUNCATED = 2 };

typedef struct fs_config fs_config;
typedef struct fs_env fs_env;
typedef struct fs_policy fs_policy;

FS_API const char* fs_version(void);
FS_API const char* fs_status_name(fs_status status);
/* Message of the last failed call on this thread; "" if none. */
FS_API const char* fs_last_error(void);

/* ---- configuration ---------------------------------------------------- */

FS_API fs_status fs_config_default(fs_config** out);
/* Experiment presets "A" .. "F". */
FS_API fs_status fs_config_from_experiment(const char* id, fs_config** out);
FS_API fs_status fs_config_load(const char* path, fs_config** out);
FS_API fs_status fs_config_save(const fs_config* cfg, const char* path);
/* key is "section.key"; value is JSON text or a bare string. */
FS_API fs_status fs_config_set(fs_config* cfg, const char* key, const char* value);
/* Applies FATSWARM_<SECTION>_<KEY> environment variables. */
FS_API fs_status fs_config_apply_env(fs_config* cfg);
/* Copies the JSON form into buf (NUL-terminated). *needed receives the
 * required size including the terminator, also on FS_ERR_BUFFER_TOO_SMALL. */
FS_API fs_status fs_config_to_json(const fs_config* cfg, char* buf, size_t cap, size_t* needed);
FS_API void fs_config_free(fs_config* cfg);

/* ---- commands ---------------------------------------------------------- */

/* quiet != 0 silences progress output on stderr. */
FS_API fs_status fs_train(const fs_config* cfg, uint64_t seed, const char* out_dir, int quiet);
/* On FS_ERR_DISCOVERY_FAILURE the outputs are still written. */
FS_API fs_status fs_discover(const fs_config* cfg, uint64_t seed, const char* out_dir, int quiet);
/* episodes == 0 keeps the bundle's configured count. */
FS_API fs_status fs_evaluate(const char* bundle_dir, size_t episodes, uint64_t seed, const char* out_dir, int quiet);
/* use_default_episodes != 0 evaluates the configured count per bundle. */
FS_API fs_status fs_bench(const char* const* bundle_dirs, size_t count, size_t episodes, int use_default_episodes,
                          uint64_t seed, const char* out_dir, int quiet);

typedef struct fs_render_options {
  int scan_rings;
  int occlusion_shading;
  /* Episode to render, or -1 for all of them. */
  long episode;
} fs_render_options;

/* cfg supplies the geometry (robot radius, box, scan radius); NULL uses the
 * defaults. */
FS_API fs_status fs_render(const char* trajectories_path, const fs_config* cfg, const char* out_dir,
                           const fs_render_options* options, int quiet);

/* ---- environment -------------------------------------------------------- */

FS_API fs_status fs_env_create(const fs_config* cfg, size_t horizon, fs_env** out);
/* Draws a fresh initial state from the configured layout. */
FS_API fs_status fs_env_reset(fs_env* env, uint64_t seed);
/* positions holds 2N values x0, y0, x1, ... */
FS_API fs_status fs_env_set_positions(fs_env* env, const double* positions, size_t len);
FS_API fs_status fs_env_step(fs_env* env, const double* action, size_t len, double* reward, int* status);
FS_API fs_status fs_env_positions(const fs_env* env, double* out, size_t cap);
FS_API fs_status fs_env_observation(const fs_env* env, double* out, size_t cap);
FS_API fs_status fs_env_signal(const fs_env* env, double* out);
FS_API size_t fs_env_robots(const fs_env* env);
FS_API void fs_env_free(fs_env* env);

/* ---- policies ----------------------------------------------------------- */

FS_API fs_status fs_policy_load(const char* checkpoint_path, fs_policy** out);
/* Deterministic (mean) action for an observation. */
FS_API fs_status fs_policy_act(const fs_policy* policy, const double* obs, size_t obs_len, double* action,
                               size_t action_cap);
FS_API size_t fs_policy_obs_dim(const fs_policy* policy);
FS_API size_t fs_policy_act_dim(const fs_policy* policy);
FS_API void fs_policy_free(fs_policy* policy);

#ifdef __cplusplus
}
#endif

#endif /* FATSWARM_H */
