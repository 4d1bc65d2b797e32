#include "fatswarm/fatswarm.h"

#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "fatswarm/config.hpp"
#include "fatswarm/error.hpp"
#include "fatswarm/harness.hpp"

struct fs_config {
  fatswarm::ExperimentConfig cfg;
};

struct fs_env {
  fatswarm::ExperimentConfig cfg;
  fatswarm::SwarmEnv env;
};

struct fs_policy {
  fatswarm::GaussianPolicy policy;
};

namespace {

thread_local std::string g_last_error;

fs_status status_of(fatswarm::ErrorCode code) {
  using fatswarm::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return FS_ERR_INVALID_ARGUMENT;
    case ErrorCode::ViewerInsideOccluder: return FS_ERR_VIEWER_INSIDE_OCCLUDER;
    case ErrorCode::ViewerInsideDisk: return FS_ERR_VIEWER_INSIDE_DISK;
    case ErrorCode::OverlappingDisks: return FS_ERR_OVERLAPPING_DISKS;
    case ErrorCode::IndexOutOfRange: return FS_ERR_INDEX_OUT_OF_RANGE;
    case ErrorCode::DimensionMismatch: return FS_ERR_DIMENSION_MISMATCH;
    case ErrorCode::ShapeMismatch: return FS_ERR_SHAPE_MISMATCH;
    case ErrorCode::PlacementFailure: return FS_ERR_PLACEMENT_FAILURE;
    case ErrorCode::NoForwardRecorded: return FS_ERR_NO_FORWARD_RECORDED;
    case ErrorCode::EmptyInitialSet: return FS_ERR_EMPTY_INITIAL_SET;
    case ErrorCode::NonFiniteLoss: return FS_ERR_NON_FINITE_LOSS;
    case ErrorCode::DiscoveryFailure: return FS_ERR_DISCOVERY_FAILURE;
    case ErrorCode::ConfigParse: return FS_ERR_CONFIG_PARSE;
    case ErrorCode::IoFailure: return FS_ERR_IO;
    case ErrorCode::UnknownExperiment: return FS_ERR_UNKNOWN_EXPERIMENT;
    case ErrorCode::MissingCheckpoint: return FS_ERR_MISSING_CHECKPOINT;
    case ErrorCode::ParseFailure: return FS_ERR_PARSE_FAILURE;
  }
  return FS_ERR_INTERNAL;
}

fs_status fail(fs_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs `fn`, translating exceptions into status codes.
template <class F>
fs_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FS_OK;
  } catch (const fatswarm::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FS_ERR_INTERNAL, "unknown error");
  }
}

#define FS_REQUIRE(ptr) \
  if (!(ptr)) return fail(FS_ERR_NULL_ARGUMENT, #ptr " must not be null")

fatswarm::RunOptions run_options(uint64_t seed, const char* out_dir, int quiet) {
  fatswarm::RunOptions o;
  o.seed = seed;
  o.out_dir = out_dir;
  o.quiet = quiet != 0;
  return o;
}

fs_status copy_out(const std::vector<double>& values, double* out, size_t cap) {
  if (cap < values.size())
    return fail(FS_ERR_BUFFER_TOO_SMALL,
                "buffer holds " + std::to_string(cap) + " values, " + std::to_string(values.size()) + " needed");
  std::copy(values.begin(), values.end(), out);
  g_last_error.clear();
  return FS_OK;
}

}  // namespace

extern "C" {

const char* fs_version(void) { return "0.1.0"; }

const char* fs_status_name(fs_status status) {
  switch (status) {
    case FS_OK: return "ok";
    case FS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FS_ERR_VIEWER_INSIDE_OCCLUDER: return "viewer inside occluder";
    case FS_ERR_VIEWER_INSIDE_DISK: return "viewer inside disk";
    case FS_ERR_OVERLAPPING_DISKS: return "overlapping disks";
    case FS_ERR_INDEX_OUT_OF_RANGE: return "index out of range";
    case FS_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case FS_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case FS_ERR_PLACEMENT_FAILURE: return "placement failure";
    case FS_ERR_NO_FORWARD_RECORDED: return "no forward pass recorded";
    case FS_ERR_EMPTY_INITIAL_SET: return "empty initial state set";
    case FS_ERR_NON_FINITE_LOSS: return "non-finite loss";
    case FS_ERR_DISCOVERY_FAILURE: return "discovery failure";
    case FS_ERR_CONFIG_PARSE: return "config parse error";
    case FS_ERR_IO: return "i/o failure";
    case FS_ERR_UNKNOWN_EXPERIMENT: return "unknown experiment";
    case FS_ERR_MISSING_CHECKPOINT: return "missing checkpoint";
    case FS_ERR_PARSE_FAILURE: return "parse failure";
    case FS_ERR_NULL_ARGUMENT: return "null argument";
    case FS_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case FS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fs_last_error(void) { return g_last_error.c_str(); }

fs_status fs_config_default(fs_config** out) {
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new fs_config{}; });
}

fs_status fs_config_from_experiment(const char* id, fs_config** out) {
  FS_REQUIRE(id);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new fs_config{fatswarm::preset(id)}; });
}

fs_status fs_config_load(const char* path, fs_config** out) {
  FS_REQUIRE(path);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new fs_config{fatswarm::load_config(path)}; });
}

fs_status fs_config_save(const fs_config* cfg, const char* path) {
  FS_REQUIRE(cfg);
  FS_REQUIRE(path);
  return guarded([&] { fatswarm::save_config(cfg->cfg, path); });
}

fs_status fs_config_set(fs_config* cfg, const char* key, const char* value) {
  FS_REQUIRE(cfg);
  FS_REQUIRE(key);
  FS_REQUIRE(value);
  return guarded([&] { fatswarm::set_config_value(cfg->cfg, key, value); });
}

fs_status fs_config_apply_env(fs_config* cfg) {
  FS_REQUIRE(cfg);
  return guarded([&] { fatswarm::apply_env_overrides(cfg->cfg); });
}

fs_status fs_config_to_json(const fs_config* cfg, char* buf, size_t cap, size_t* needed) {
  FS_REQUIRE(cfg);
  std::string text;
  const fs_status s = guarded([&] { text = fatswarm::config_to_json(cfg->cfg); });
  if (s != FS_OK) return s;
  if (needed) *needed = text.size() + 1;
  if (!buf || cap < text.size() + 1)
    return fail(FS_ERR_BUFFER_TOO_SMALL, "config JSON needs " + std::to_string(text.size() + 1) + " bytes");
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return FS_OK;
}

void fs_config_free(fs_config* cfg) { delete cfg; }

fs_status fs_train(const fs_config* cfg, uint64_t seed, const char* out_dir, int quiet) {
  FS_REQUIRE(cfg);
  FS_REQUIRE(out_dir);
  return guarded([&] { fatswarm::cmd_train(cfg->cfg, run_options(seed, out_dir, quiet)); });
}

fs_status fs_discover(const fs_config* cfg, uint64_t seed, const char* out_dir, int quiet) {
  FS_REQUIRE(cfg);
  FS_REQUIRE(out_dir);
  return guarded([&] { fatswarm::cmd_discover(cfg->cfg, run_options(seed, out_dir, quiet)); });
}

fs_status fs_evaluate(const char* bundle_dir, size_t episodes, uint64_t seed, const char* out_dir, int quiet) {
  FS_REQUIRE(bundle_dir);
  FS_REQUIRE(out_dir);
  return guarded([&] {
    auto opts = run_options(seed, out_dir, quiet);
    if (episodes > 0) opts.episodes = episodes;
    fatswarm::cmd_evaluate(bundle_dir, opts);
  });
}

fs_status fs_bench(const char* const* bundle_dirs, size_t count, size_t episodes, int use_default_episodes,
                   uint64_t seed, const char* out_dir, int quiet) {
  if (count > 0) FS_REQUIRE(bundle_dirs);
  FS_REQUIRE(out_dir);
  std::vector<std::filesystem::path> dirs;
  for (size_t i = 0; i < count; ++i) {
    if (!bundle_dirs[i]) return fail(FS_ERR_NULL_ARGUMENT, "bundle_dirs[" + std::to_string(i) + "] is null");
    dirs.emplace_back(bundle_dirs[i]);
  }
  return guarded([&] {
    auto opts = run_options(seed, out_dir, quiet);
    if (!use_default_episodes) opts.episodes = episodes;
    fatswarm::cmd_bench(dirs, opts);
  });
}

fs_status fs_render(const char* trajectories_path, const fs_config* cfg, const char* out_dir,
                    const fs_render_options* options, int quiet) {
  FS_REQUIRE(trajectories_path);
  FS_REQUIRE(out_dir);
  return guarded([&] {
    fatswarm::RenderOptions ro;
    std::optional<std::size_t> episode = 0;
    if (options) {
      ro.scan_rings = options->scan_rings != 0;
      ro.occlusion_shading = options->occlusion_shading != 0;
      if (options->episode < 0)
        episode.reset();
      else
        episode = static_cast<std::size_t>(options->episode);
    }
    const fatswarm::ExperimentConfig c = cfg ? cfg->cfg : fatswarm::ExperimentConfig{};
    fatswarm::cmd_render(trajectories_path, c, ro, run_options(0, out_dir, quiet), episode);
  });
}

fs_status fs_env_create(const fs_config* cfg, size_t horizon, fs_env** out) {
  FS_REQUIRE(cfg);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    cfg->cfg.validate();
    const size_t h = horizon > 0 ? horizon : cfg->cfg.ppo.horizon;
    *out = new fs_env{cfg->cfg, fatswarm::SwarmEnv(cfg->cfg.swarm, cfg->cfg.mode, h)};
  });
}

fs_status fs_env_reset(fs_env* env, uint64_t seed) {
  FS_REQUIRE(env);
  return guarded([&] {
    fatswarm::Rng rng = fatswarm::make_rng(seed, fatswarm::Stream::EnvReset);
    env->env.reset(env->cfg.init, rng);
  });
}

fs_status fs_env_set_positions(fs_env* env, const double* positions, size_t len) {
  FS_REQUIRE(env);
  FS_REQUIRE(positions);
  if (len != 2 * env->cfg.swarm.n)
    return fail(FS_ERR_DIMENSION_MISMATCH, "expected " + std::to_string(2 * env->cfg.swarm.n) + " coordinates");
  return guarded([&] {
    fatswarm::SwarmState s;
    for (size_t i = 0; i < env->cfg.swarm.n; ++i) s.positions.push_back({positions[2 * i], positions[2 * i + 1]});
    env->env.set_state(std::move(s));
  });
}

fs_status fs_env_step(fs_env* env, const double* action, size_t len, double* reward, int* status) {
  FS_REQUIRE(env);
  FS_REQUIRE(action);
  return guarded([&] {
    const fatswarm::StepOutcome o = env->env.step(std::span<const double>(action, len));
    if (reward) *reward = o.reward;
    if (status) {
      switch (o.status) {
        case fatswarm::StepStatus::Running: *status = FS_STEP_RUNNING; break;
        case fatswarm::StepStatus::FailureTerminal: *status = FS_STEP_FAILURE; break;
        case fatswarm::StepStatus::HorizonTruncated: *status = FS_STEP_TRUNCATED; break;
      }
    }
  });
}

fs_status fs_env_positions(const fs_env* env, double* out, size_t cap) {
  FS_REQUIRE(env);
  FS_REQUIRE(out);
  std::vector<double> flat;
  for (const fatswarm::Vec2& p : env->env.state().positions) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return copy_out(flat, out, cap);
}

fs_status fs_env_observation(const fs_env* env, double* out, size_t cap) {
  FS_REQUIRE(env);
  FS_REQUIRE(out);
  return copy_out(fatswarm::observation(env->env.state(), env->cfg.swarm), out, cap);
}

fs_status fs_env_signal(const fs_env* env, double* out) {
  FS_REQUIRE(env);
  FS_REQUIRE(out);
  return guarded([&] { *out = env->env.signal(); });
}

size_t fs_env_robots(const fs_env* env) { return env ? env->cfg.swarm.n : 0; }

void fs_env_free(fs_env* env) { delete env; }

fs_status fs_policy_load(const char* checkpoint_path, fs_policy** out) {
  FS_REQUIRE(checkpoint_path);
  FS_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const fatswarm::Checkpoint c = fatswarm::load_checkpoint(checkpoint_path);
    if (c.kind != fatswarm::NetworkKind::Policy)
      throw fatswarm::Error(fatswarm::ErrorCode::ParseFailure, "checkpoint does not hold a policy network");
    *out = new fs_policy{c.policy()};
  });
}

fs_status fs_policy_act(const fs_policy* policy, const double* obs, size_t obs_len, double* action,
                        size_t action_cap) {
  FS_REQUIRE(policy);
  FS_REQUIRE(obs);
  FS_REQUIRE(action);
  std::vector<double> mean;
  const fs_status s = guarded([&] { mean = policy->policy.mean(std::span<const double>(obs, obs_len)); });
  if (s != FS_OK) return s;
  return copy_out(mean, action, action_cap);
}

size_t fs_policy_obs_dim(const fs_policy* policy) { return policy ? policy->policy.obs_dim() : 0; }

size_t fs_policy_act_dim(const fs_policy* policy) { return policy ? policy->policy.act_dim() : 0; }

void fs_policy_free(fs_policy* policy) { delete policy; }

}  // extern "C"
