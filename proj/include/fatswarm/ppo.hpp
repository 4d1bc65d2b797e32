#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fatswarm/env.hpp"
#include "fatswarm/nn.hpp"

namespace fatswarm {

/// Everything needed to build an environment instance for a worker.
struct EnvSpec {
  SwarmConfig cfg;
  RewardMode mode = RewardMode::PredefinedPoint;
  SignalWeights weights;
  GoalSpec goal;

  static EnvSpec make(const SwarmConfig& cfg, RewardMode mode);
};

struct HyperParams {
  double gamma = 0.99;
  double lambda = 0.95;
  double eps_c_start = 0.1;
  double eps_c_end = 0.3;
  double alpha = 3e-4;  // policy learning rate
  double beta = 1e-3;   // value learning rate
  std::size_t epochs = 150;  // Z
  std::size_t horizon = 400;
  std::size_t episodes_per_batch = 16;
  std::size_t update_epochs = 8;
  std::size_t minibatches = 4;
  /// false selects the literal undiscounted rewards-to-go without bootstrap.
  bool discounted_rewards_to_go = true;
  std::vector<std::size_t> hidden{64, 64};
  /// Initial policy std; <= 0 derives 0.5 * (v_max - v_min) / 2.
  double initial_std = 0.0;
  /// Multiplier on the Glorot range of the policy's output layer.
  double policy_output_scale = 0.01;
  /// Rollout threads; 0 uses the hardware concurrency.
  std::size_t workers = 0;

  void validate() const;
  /// Clipping range for a 0-based epoch, linear from eps_c_start to eps_c_end.
  double eps_c_at(std::size_t epoch) const;
};

/// Stopping rule for deterministic (mean action) evaluation.
struct ConvergenceRule {
  double eps_conv = 1e-4;
  std::size_t k_consecutive = 10;
};

struct Transition {
  std::vector<double> state_obs;
  std::vector<double> action;  // pre-clamp sample
  double log_prob_old = 0.0;
  double reward = 0.0;
  std::vector<double> next_state_obs;
  StepStatus done_flag = StepStatus::Running;
};

struct Trajectory {
  std::vector<Transition> steps;
  SwarmState final_state;

  bool failed() const { return !steps.empty() && steps.back().done_flag == StepStatus::FailureTerminal; }
  double total_reward() const;
};

/// Trajectories plus per-step estimates, flattened in trajectory order.
struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  std::vector<double> advantages;
  std::vector<double> rewards_to_go;
  bool advantages_normalized = false;

  std::size_t total_steps() const;
  /// (trajectory, step) for a flat index.
  std::vector<std::pair<std::size_t, std::size_t>> flat_index() const;
};

/// Episodes start from states drawn uniformly from `sigma` and run until a
/// collision or the horizon. Episode e of epoch k uses its own RNG stream, so
/// the batch does not depend on the worker count.
RolloutBatch collect_rollouts(const EnvSpec& env, const GaussianPolicy& policy, const HyperParams& hp,
                              std::span<const SwarmState> sigma, std::uint64_t seed, std::uint64_t epoch);

/// R_t = sum_{l >= t} gamma^(l - t) r_l, plus gamma^(T - t) * bootstrap when
/// the trajectory was truncated rather than failed.
std::vector<double> rewards_to_go(std::span<const double> rewards, double gamma, bool failure_terminal,
                                  double bootstrap_value = 0.0);

/// Truncated GAE. `values` holds V(S_0) .. V(S_T); V(S_T) is taken as 0 when
/// the trajectory ended in failure.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                        double lambda, bool failure_terminal);

/// Fills advantages and rewards-to-go for every trajectory in the batch.
void estimate_advantages(RolloutBatch& batch, const ValueNet& value, const HyperParams& hp);

/// Mean/std normalization in place; a single sample is only centered.
void normalize_advantages(std::vector<double>& adv);

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_term(double ratio, double advantage, double eps_c);

struct ObjectiveResult {
  double objective = 0.0;
  PolicyGrads grads;
};

/// Mean clipped surrogate over the selected flat sample indices (all when empty).
ObjectiveResult clipped_objective(const RolloutBatch& batch, const GaussianPolicy& policy, double eps_c,
                                  std::span<const std::size_t> indices = {});

struct ValueLossResult {
  double loss = 0.0;
  MlpParams grads;
};

ValueLossResult value_loss(const RolloutBatch& batch, const ValueNet& value,
                           std::span<const std::size_t> indices = {});

/// Outcome of running a policy deterministically from one start state.
struct PhaseRun {
  std::vector<SwarmState> states;                // start state first
  std::vector<std::vector<double>> actions;      // clamped velocities actually applied
  std::vector<double> rewards;
  bool collided = false;
  bool converged = false;

  std::size_t steps() const { return rewards.size(); }
  const SwarmState& final_state() const { return states.back(); }
};

/// Runs mean actions until |reward| < eps_conv for k_consecutive steps, a
/// collision, or `horizon` steps. With `stop_on_regress`, a step whose reward
/// would be negative is not taken and the run ends, so the signal never drops.
PhaseRun run_deterministic(const GaussianPolicy& policy, const EnvSpec& env, const SwarmState& start,
                           std::size_t horizon, const ConvergenceRule& rule, bool stop_on_regress = false);

struct EpochMetrics {
  std::size_t epoch = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double objective = 0.0;
  double value_loss = 0.0;
};

struct TrainResult {
  GaussianPolicy policy;
  ValueNet value;
  OptimizerMoments policy_moments;
  OptimizerMoments value_moments;
  std::vector<SwarmState> sigma_star;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Clipped-PPO training from initial states `sigma`, followed by
/// deterministic evaluation from every state in `sigma`; final states of runs
/// that did not collide form sigma*.
TrainResult train_policy(std::span<const SwarmState> sigma, const HyperParams& hp, const EnvSpec& env,
                         std::uint64_t seed, const ConvergenceRule& rule = {}, const EpochCallback& on_epoch = {});

/// CSV with header epoch,mean_return,mean_length,objective,value_loss.
std::string metrics_csv(const std::vector<EpochMetrics>& rows);
std::vector<EpochMetrics> parse_metrics_csv(const std::string& text);

}  // namespace fatswarm
