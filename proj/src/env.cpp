#include "fatswarm/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fatswarm/error.hpp"

namespace fatswarm {

void SwarmConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "SwarmConfig: " + what); };
  if (n < 1) fail("n must be >= 1");
  if (!(r_bot > 0.0) || !std::isfinite(r_bot)) fail("r_bot must be positive");
  if (!(2.0 * r_bot <= delta_s) || !std::isfinite(delta_s)) fail("delta_s must be >= 2 r_bot");
  if (!(v_min < v_max) || !std::isfinite(v_min) || !std::isfinite(v_max)) fail("v_min must be < v_max");
  if (!(x_w > 2.0 * r_bot) || !(y_w > 2.0 * r_bot) || !std::isfinite(x_w) || !std::isfinite(y_w))
    fail("x_w and y_w must exceed 2 r_bot");
  if (!(r_scan > 0.0)) fail("r_scan must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
}

const char* to_string(RewardMode m) {
  return m == RewardMode::PredefinedPoint ? "predefined_point" : "undefined_point";
}

const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Scattered: return "scattered";
    case InitialKind::Distributed: return "distributed";
    case InitialKind::Packed: return "packed";
  }
  return "?";
}

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Running: return "running";
    case StepStatus::FailureTerminal: return "failure";
    case StepStatus::HorizonTruncated: return "truncated";
  }
  return "?";
}

SignalWeights SignalWeights::derived(const SwarmConfig& cfg) {
  const double n = static_cast<double>(cfg.n);
  const double diag = std::sqrt(cfg.x_w * cfg.x_w + cfg.y_w * cfg.y_w);
  const double pairs = n * (n - 1.0);
  SignalWeights w;
  w.w_close = 1.0 / (n * diag);
  if (cfg.n > 1) {
    w.w_nclose = 1.0 / (pairs * 2.0 * diag);
    w.w_neighbors = 1.0 / pairs;
    w.w_visible = 1.0 / pairs;
    w.w_safety = 1.0 / (pairs * std::sqrt(cfg.delta_s + cfg.r_bot));
  }
  return w;
}

double GoalSpec::radius(const SwarmConfig& cfg) const {
  return rho_g.value_or(static_cast<double>(cfg.n) * (2.0 * cfg.r_bot + cfg.delta_s));
}

double signal_close(const SwarmState& state, const SignalWeights& w) {
  double sum = 0.0;
  for (const Vec2& p : state.positions) sum += norm(p);
  return 1.0 - w.w_close * sum;
}

double f_safe(double dist_ij, const SwarmConfig& cfg) {
  const double fd = dist_ij - cfg.delta_s;
  if (fd < 0.0) return 0.0;
  return std::sqrt(std::max(0.0, cfg.delta_s + cfg.r_bot - fd));
}

double signal_safety(const SwarmState& state, const SignalWeights& w, const SwarmConfig& cfg) {
  double sum = 0.0;
  const auto& p = state.positions;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) sum += 2.0 * f_safe(distance(p[i], p[j]), cfg);
  return w.w_safety * sum;
}

double signal_neighbors(const VisibilityCensus& census, const SignalWeights& w) {
  return w.w_neighbors * static_cast<double>(census.total_all());
}

double signal_visible(const VisibilityCensus& census, const SignalWeights& w) {
  return w.w_visible * static_cast<double>(census.total_vis());
}

double signal_nclose(const SwarmState& state, const SignalWeights& w) {
  double sum = 0.0;
  const auto& p = state.positions;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) sum += 2.0 * distance(p[i], p[j]);
  return 1.0 - w.w_nclose * sum;
}

double composite_signal(const SwarmState& state, RewardMode mode, const SignalWeights& w,
                        const SwarmConfig& cfg) {
  const VisibilityCensus census = visibility_census(state, cfg);
  const double gather = mode == RewardMode::PredefinedPoint ? signal_close(state, w) : signal_nclose(state, w);
  return gather + signal_safety(state, w, cfg) + signal_neighbors(census, w) + signal_visible(census, w);
}

namespace {

Vec2 clamp_into_box(const Vec2& p, const SwarmConfig& cfg) {
  const double hx = cfg.x_w - cfg.r_bot;
  const double hy = cfg.y_w - cfg.r_bot;
  return {std::clamp(p.x, -hx, hx), std::clamp(p.y, -hy, hy)};
}

}  // namespace

SwarmState advance(const SwarmState& state, std::span<const double> action, const SwarmConfig& cfg) {
  if (action.size() != 2 * state.size())
    throw Error(ErrorCode::DimensionMismatch, "step: action length " + std::to_string(action.size()) +
                                                  " does not match 2N = " + std::to_string(2 * state.size()));
  SwarmState next;
  next.step_index = state.step_index + 1;
  next.positions.resize(state.size());
  for (std::size_t n = 0; n < state.size(); ++n) {
    Vec2 v{std::clamp(action[2 * n], cfg.v_min, cfg.v_max), std::clamp(action[2 * n + 1], cfg.v_min, cfg.v_max)};
    next.positions[n] = clamp_into_box(state.positions[n] + v * cfg.dt, cfg);
  }
  return next;
}

StepStatus step_status(const SwarmState& next, const SwarmConfig& cfg, std::size_t horizon) {
  if (has_collision(next, cfg)) return StepStatus::FailureTerminal;
  if (next.step_index >= horizon) return StepStatus::HorizonTruncated;
  return StepStatus::Running;
}

StepOutcome step(const SwarmState& state, std::span<const double> action, RewardMode mode,
                 const SignalWeights& w, const SwarmConfig& cfg, std::size_t horizon) {
  StepOutcome out;
  out.next_state = advance(state, action, cfg);
  out.reward = composite_signal(out.next_state, mode, w, cfg) - composite_signal(state, mode, w, cfg);
  out.status = step_status(out.next_state, cfg, horizon);
  return out;
}

StepOutcome step(const SwarmState& state, const SwarmAction& action, RewardMode mode,
                 const SignalWeights& w, const SwarmConfig& cfg, std::size_t horizon) {
  std::vector<double> flat;
  flat.reserve(2 * action.velocities.size());
  for (const Vec2& v : action.velocities) {
    flat.push_back(v.x);
    flat.push_back(v.y);
  }
  return step(state, std::span<const double>(flat), mode, w, cfg, horizon);
}

std::vector<Vec2> initial_anchors(InitialKind kind, const SwarmConfig& cfg, double epsilon) {
  const std::size_t n = cfg.n;
  const double min_pitch = 2.0 * cfg.r_bot + 2.0 * epsilon;
  std::vector<Vec2> anchors;
  anchors.reserve(n);
  switch (kind) {
    case InitialKind::Scattered: {
      const double radius = 0.9 * std::min(cfg.x_w, cfg.y_w);
      for (std::size_t i = 0; i < n; ++i) {
        double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
        anchors.push_back({radius * std::cos(a), radius * std::sin(a)});
      }
      break;
    }
    case InitialKind::Distributed: {
      // Two small grids growing inward from the lower-left and upper-right corners.
      const double pitch = std::max(2.0 * cfg.r_bot + cfg.delta_s, min_pitch);
      const double inset = 3.0 * cfg.r_bot;
      const std::size_t counts[2] = {(n + 1) / 2, n / 2};
      for (int corner = 0; corner < 2; ++corner) {
        const std::size_t c = counts[corner];
        const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(c))));
        const double sign = corner == 0 ? 1.0 : -1.0;
        for (std::size_t k = 0; k < c; ++k) {
          double dx = inset + static_cast<double>(k % cols) * pitch;
          double dy = inset + static_cast<double>(k / cols) * pitch;
          anchors.push_back({-sign * cfg.x_w + sign * dx, -sign * cfg.y_w + sign * dy});
        }
      }
      break;
    }
    case InitialKind::Packed: {
      // Rows of at most six, centered on (0, -y_w / 2).
      const double pitch = std::max(2.0 * cfg.r_bot + cfg.delta_s / 2.0, min_pitch);
      const std::size_t rows = (n + 5) / 6;
      const double y_center = -cfg.y_w / 2.0;
      std::size_t placed = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t in_row = std::min<std::size_t>(6, n - placed);
        const double y = y_center + (static_cast<double>(r) - static_cast<double>(rows - 1) / 2.0) * pitch;
        for (std::size_t c = 0; c < in_row; ++c) {
          double x = (static_cast<double>(c) - static_cast<double>(in_row - 1) / 2.0) * pitch;
          anchors.push_back({x, y});
        }
        placed += in_row;
      }
      break;
    }
  }
  return anchors;
}

SwarmState reset(const InitialConfig& init, const SwarmConfig& cfg, Rng& rng) {
  if (!(init.epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "reset: epsilon must be >= 0");
  const auto anchors = initial_anchors(init.kind, cfg, init.epsilon);
  const double hx = cfg.x_w - cfg.r_bot;
  const double hy = cfg.y_w - cfg.r_bot;
  for (const Vec2& a : anchors)
    if (std::abs(a.x) > hx || std::abs(a.y) > hy)
      throw Error(ErrorCode::PlacementFailure, "reset: anchor layout does not fit inside the world");

  constexpr int kMaxRetries = 100;
  std::uniform_real_distribution<double> noise(-init.epsilon, init.epsilon);
  SwarmState state;
  state.positions.reserve(anchors.size());
  for (std::size_t n = 0; n < anchors.size(); ++n) {
    bool placed = false;
    for (int attempt = 0; attempt <= kMaxRetries && !placed; ++attempt) {
      Vec2 p = anchors[n];
      if (init.epsilon > 0.0) {
        p.x += noise(rng);
        p.y += noise(rng);
      }
      p = clamp_into_box(p, cfg);
      placed = std::none_of(state.positions.begin(), state.positions.end(), [&](const Vec2& q) {
        return distance(p, q) < 2.0 * cfg.r_bot - kGeomTol;
      });
      if (placed) state.positions.push_back(p);
    }
    if (!placed)
      throw Error(ErrorCode::PlacementFailure,
                  "reset: could not place robot " + std::to_string(n) + " without overlap");
  }
  return state;
}

SwarmState reset(const InitialConfig& init, const SwarmConfig& cfg) {
  Rng rng = make_rng(init.seed, Stream::EnvReset);
  return reset(init, cfg, rng);
}

void observation(const SwarmState& state, const SwarmConfig& cfg, std::span<double> out) {
  if (out.size() != 2 * state.size()) throw Error(ErrorCode::DimensionMismatch, "observation: output size mismatch");
  for (std::size_t n = 0; n < state.size(); ++n) {
    out[2 * n] = state.positions[n].x / cfg.x_w;
    out[2 * n + 1] = state.positions[n].y / cfg.y_w;
  }
}

std::vector<double> observation(const SwarmState& state, const SwarmConfig& cfg) {
  std::vector<double> out(2 * state.size());
  observation(state, cfg, out);
  return out;
}

bool goal_reached(const SwarmState& state, RewardMode mode, const SwarmConfig& cfg, const GoalSpec& goal) {
  if (has_collision(state, cfg)) return false;
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!mutually_visible(state, i, j, cfg)) return false;
  const double rho = goal.radius(cfg);
  if (mode == RewardMode::PredefinedPoint) {
    return std::all_of(state.positions.begin(), state.positions.end(),
                       [rho](const Vec2& p) { return norm(p) <= rho; });
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(state.positions[i], state.positions[j]) > rho) return false;
  return true;
}

SwarmEnv::SwarmEnv(SwarmConfig cfg, RewardMode mode, std::size_t horizon, std::optional<SignalWeights> weights)
    : cfg_(cfg), mode_(mode), horizon_(horizon), weights_(weights.value_or(SignalWeights::derived(cfg))) {
  cfg_.validate();
}

void SwarmEnv::set_state(SwarmState s) {
  if (s.size() != cfg_.n) throw Error(ErrorCode::DimensionMismatch, "SwarmEnv: state has wrong robot count");
  state_ = std::move(s);
}

const SwarmState& SwarmEnv::reset(const InitialConfig& init, Rng& rng) {
  state_ = fatswarm::reset(init, cfg_, rng);
  return state_;
}

StepOutcome SwarmEnv::step(std::span<const double> action) {
  StepOutcome out = fatswarm::step(state_, action, mode_, weights_, cfg_, horizon_);
  state_ = out.next_state;
  return out;
}

double SwarmEnv::signal() const { return composite_signal(state_, mode_, weights_, cfg_); }

}  // namespace fatswarm
