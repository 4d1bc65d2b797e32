#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fatswarm/env.hpp"
#include "fatswarm/nn.hpp"
#include "fatswarm/ppo.hpp"

namespace fatswarm {

/// Discount factor per training run; base first.
struct DiscountSchedule {
  std::vector<double> values;

  double at(std::size_t run) const;
  void validate() const;
};

DiscountSchedule discount_schedule_default();

struct DiscoveryConfig {
  DiscountSchedule schedule = discount_schedule_default();
  /// Training horizon per run; the last entry repeats.
  std::vector<std::size_t> horizons{400, 64};
  std::size_t sigma_size = 32;
  std::size_t max_chain = 2;
  /// Policies trained before a valid verdict may end the loop.
  std::size_t min_chain = 1;
  std::size_t eval_episodes = 20;
  ConvergenceRule convergence;
  /// Optional signal weights for auxiliary training runs.
  std::optional<SignalWeights> aux_weights;

  std::size_t horizon_at(std::size_t run) const;
  void validate() const;
};

struct PolicyChain {
  std::vector<GaussianPolicy> policies;
  std::vector<ValueNet> values;
  ConvergenceRule switch_criterion;
  std::vector<std::size_t> horizons;

  std::size_t size() const { return policies.size(); }
};

/// States visited during one evaluation episode, with the phase (0 = base,
/// 1.. = auxiliary) that produced each step.
struct EpisodeTrace {
  std::vector<SwarmState> states;
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;
  std::vector<std::size_t> phases;

  std::size_t steps() const { return rewards.size(); }
};

struct EpisodeVerdict {
  bool collision_free = true;
  bool goal = false;
  std::size_t steps_base = 0;
  std::size_t steps_aux = 0;
  double signal_initial = 0.0;
  double signal_base_final = 0.0;
  double signal_final = 0.0;
};

struct PatternVerdict {
  bool valid = false;
  std::vector<EpisodeVerdict> episodes;
  std::vector<EpisodeTrace> trajectories;

  double success_rate() const;
  std::size_t collisions() const;
};

/// Per episode: collision-free at every recorded state, goal reached at the
/// final state. Valid is the conjunction over episodes.
PatternVerdict validate_patterns(std::vector<EpisodeTrace> trajectories, const EnvSpec& env);

/// Runs the chain with mean actions from `episodes` fresh initial states.
/// Each policy runs until its reward stays below the switch threshold, a
/// collision, or its horizon; auxiliary phases additionally stop before any
/// step that would lower the signal.
PatternVerdict evaluate_chain(const PolicyChain& chain, const InitialConfig& init, const EnvSpec& env,
                              std::size_t episodes, std::uint64_t seed);

EpisodeTrace run_chain_episode(const PolicyChain& chain, const EnvSpec& env, const SwarmState& start);

enum class DiscoveryFailureReason { SigmaExhausted, ChainCap };

const char* to_string(DiscoveryFailureReason r);

struct DiscoveryOutcome {
  PolicyChain chain;
  PatternVerdict verdict;  // from the last evaluation
  std::vector<std::vector<EpochMetrics>> metrics;  // per training run
  std::vector<std::size_t> sigma_sizes;            // |sigma| entering each run
  std::optional<DiscoveryFailureReason> failure;

  bool ok() const { return !failure.has_value(); }
};

struct DiscoveryProgress {
  std::size_t run = 0;
  const EpochMetrics* epoch = nullptr;          // set during training
  const PatternVerdict* verdict = nullptr;      // set after each evaluation
};

using DiscoveryCallback = std::function<void(const DiscoveryProgress&)>;

/// Trains base and auxiliary policies in turn, each on the final states the
/// previous one reached without collision, until the chain's evaluation
/// forms valid patterns, no states remain, or the chain is at max length.
DiscoveryOutcome run_discovery(const InitialConfig& init, const HyperParams& hp, const EnvSpec& env,
                               const DiscoveryConfig& dc, std::uint64_t seed,
                               const DiscoveryCallback& progress = {});

/// The initial state set drawn for a discovery seed.
std::vector<SwarmState> sample_initial_states(const InitialConfig& init, const SwarmConfig& cfg, std::size_t count,
                                              std::uint64_t seed);

}  // namespace fatswarm
