#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fatswarm/geometry.hpp"
#include "fatswarm/rng.hpp"
#include "fatswarm/swarm.hpp"

namespace fatswarm {

enum class RewardMode { PredefinedPoint, UndefinedPoint };

const char* to_string(RewardMode m);

/// Scale factors that map each signal into [0, 1].
struct SignalWeights {
  double w_close = 0.0;
  double w_safety = 0.0;
  double w_neighbors = 0.0;
  double w_visible = 0.0;
  double w_nclose = 0.0;

  /// Each denominator is the largest value the summed quantity can take.
  static SignalWeights derived(const SwarmConfig& cfg);
};

enum class InitialKind { Scattered, Distributed, Packed };

const char* to_string(InitialKind k);

struct InitialConfig {
  InitialKind kind = InitialKind::Packed;
  double epsilon = 2.0;
  std::uint64_t seed = 0;
};

enum class StepStatus { Running, FailureTerminal, HorizonTruncated };

const char* to_string(StepStatus s);

struct SwarmAction {
  std::vector<Vec2> velocities;
};

struct StepOutcome {
  SwarmState next_state;
  double reward = 0.0;
  StepStatus status = StepStatus::Running;
};

/// Closeness radius used by goal_reached. Unset means N * (2 r_bot + delta_s).
struct GoalSpec {
  std::optional<double> rho_g;

  double radius(const SwarmConfig& cfg) const;
};

// Reward signals. Pair sums run over ordered pairs i != j.

double signal_close(const SwarmState& state, const SignalWeights& w);
double f_safe(double dist_ij, const SwarmConfig& cfg);
double signal_safety(const SwarmState& state, const SignalWeights& w, const SwarmConfig& cfg);
double signal_neighbors(const VisibilityCensus& census, const SignalWeights& w);
double signal_visible(const VisibilityCensus& census, const SignalWeights& w);
double signal_nclose(const SwarmState& state, const SignalWeights& w);

/// Sum of the mode's four signals (close or nclose, safety, neighbors, visible).
double composite_signal(const SwarmState& state, RewardMode mode, const SignalWeights& w,
                        const SwarmConfig& cfg);

/// One synchronous cycle: clamp velocities, integrate P += V dt, clamp the
/// centers into the box, reward = C(next) - C(current). A collision ends the
/// episode with FailureTerminal; otherwise the horizon truncates it.
StepOutcome step(const SwarmState& state, const SwarmAction& action, RewardMode mode,
                 const SignalWeights& w, const SwarmConfig& cfg, std::size_t horizon);

/// Same as above with the action given as a flat [vx0, vy0, vx1, ...] vector.
StepOutcome step(const SwarmState& state, std::span<const double> action, RewardMode mode,
                 const SignalWeights& w, const SwarmConfig& cfg, std::size_t horizon);

/// Kinematics only: clamped velocities integrated and centers clamped into
/// the box. The returned state has step_index + 1.
SwarmState advance(const SwarmState& state, std::span<const double> action, const SwarmConfig& cfg);

/// Status of a freshly advanced state.
StepStatus step_status(const SwarmState& next, const SwarmConfig& cfg, std::size_t horizon);

/// Noise-free anchor points for an initial configuration kind. Grid pitches
/// widen to 2 r_bot + 2 epsilon when needed so that noise cannot cause overlap.
std::vector<Vec2> initial_anchors(InitialKind kind, const SwarmConfig& cfg, double epsilon = 0.0);

/// Anchors plus U(-eps, eps) noise per coordinate. A robot whose draw overlaps
/// an already placed robot is redrawn, at most 100 times.
SwarmState reset(const InitialConfig& init, const SwarmConfig& cfg, Rng& rng);
SwarmState reset(const InitialConfig& init, const SwarmConfig& cfg);

/// Flat network input (x / x_w, y / y_w) per robot.
std::vector<double> observation(const SwarmState& state, const SwarmConfig& cfg);
void observation(const SwarmState& state, const SwarmConfig& cfg, std::span<double> out);

/// Collision-free, all pairs mutually visible and gathered (around the origin
/// for PredefinedPoint, by diameter for UndefinedPoint).
bool goal_reached(const SwarmState& state, RewardMode mode, const SwarmConfig& cfg,
                  const GoalSpec& goal = {});

/// Stateful wrapper around the pure functions above.
class SwarmEnv {
 public:
  SwarmEnv(SwarmConfig cfg, RewardMode mode, std::size_t horizon,
           std::optional<SignalWeights> weights = std::nullopt);

  const SwarmConfig& config() const { return cfg_; }
  const SignalWeights& weights() const { return weights_; }
  RewardMode mode() const { return mode_; }
  std::size_t horizon() const { return horizon_; }
  const SwarmState& state() const { return state_; }

  void set_state(SwarmState s);
  const SwarmState& reset(const InitialConfig& init, Rng& rng);
  StepOutcome step(std::span<const double> action);
  double signal() const;

 private:
  SwarmConfig cfg_;
  RewardMode mode_;
  std::size_t horizon_;
  SignalWeights weights_;
  SwarmState state_;
};

}  // namespace fatswarm
