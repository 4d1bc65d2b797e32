#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fatswarm/discovery.hpp"
#include "fatswarm/env.hpp"
#include "fatswarm/ppo.hpp"

namespace fatswarm {

/// Everything a run needs besides the seed and output location.
struct ExperimentConfig {
  std::string id = "custom";
  SwarmConfig swarm;
  RewardMode mode = RewardMode::PredefinedPoint;
  InitialConfig init;
  GoalSpec goal;
  HyperParams ppo;
  DiscoveryConfig discovery;
  /// Fresh initial states per chain in bench.
  std::size_t bench_episodes = 200;

  EnvSpec env() const;
  void validate() const;
};

/// Experiment ids with a preset, in order.
const std::vector<std::string>& preset_ids();

/// Preset for an experiment id (A..F); throws UnknownExperiment otherwise.
ExperimentConfig preset(std::string_view id);

/// JSON text with sections world, swarm, reward, init, ppo, network,
/// discovery and bench. Unknown keys are rejected when parsing.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(std::string_view text);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Sets "section.key" from text. The text is read as JSON when it parses and
/// as a plain string otherwise, so `ppo.epochs=3` and `reward.mode=undefined_point`
/// both work.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

using EnvLookup = std::function<const char*(const char*)>;

/// Applies FATSWARM_<SECTION>_<KEY> variables, e.g. FATSWARM_PPO_EPOCHS=20.
/// Returns the names of the variables that were applied.
std::vector<std::string> apply_env_overrides(ExperimentConfig& cfg, const EnvLookup& lookup = {});

RewardMode parse_reward_mode(std::string_view s);
InitialKind parse_initial_kind(std::string_view s);

}  // namespace fatswarm
