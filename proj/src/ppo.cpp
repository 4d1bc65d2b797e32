#include "fatswarm/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "fatswarm/error.hpp"

namespace fatswarm {

EnvSpec EnvSpec::make(const SwarmConfig& cfg, RewardMode mode) {
  cfg.validate();
  return EnvSpec{cfg, mode, SignalWeights::derived(cfg), GoalSpec{}};
}

void HyperParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "HyperParams: " + what); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(eps_c_start > 0.0 && eps_c_start < 1.0 && eps_c_end > 0.0 && eps_c_end < 1.0))
    fail("clipping range must lie in (0, 1)");
  if (!(alpha > 0.0) || !(beta > 0.0)) fail("learning rates must be positive");
  if (horizon == 0 || episodes_per_batch == 0 || update_epochs == 0 || minibatches == 0)
    fail("horizon, episodes_per_batch, update_epochs and minibatches must be positive");
}

double HyperParams::eps_c_at(std::size_t epoch) const {
  if (epochs <= 1) return eps_c_start;
  const double frac = static_cast<double>(std::min(epoch, epochs - 1)) / static_cast<double>(epochs - 1);
  return eps_c_start + (eps_c_end - eps_c_start) * frac;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const auto& t : steps) sum += t.reward;
  return sum;
}

std::size_t RolloutBatch::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

std::vector<std::pair<std::size_t, std::size_t>> RolloutBatch::flat_index() const {
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  idx.reserve(total_steps());
  for (std::size_t e = 0; e < trajectories.size(); ++e)
    for (std::size_t t = 0; t < trajectories[e].steps.size(); ++t) idx.emplace_back(e, t);
  return idx;
}

namespace {

std::size_t worker_count(const HyperParams& hp, std::size_t jobs) {
  std::size_t w = hp.workers ? hp.workers : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

// Runs job(i) for i in [0, count) over `workers` threads. Each job writes only
// its own output slot, so the result is independent of scheduling.
template <typename Job>
void parallel_for(std::size_t count, std::size_t workers, Job&& job) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Trajectory run_episode(const EnvSpec& env, const GaussianPolicy& policy, const HyperParams& hp,
                       const SwarmState& start, Rng& rng) {
  Trajectory traj;
  SwarmState state = start;
  state.step_index = 0;
  double signal = composite_signal(state, env.mode, env.weights, env.cfg);
  std::vector<double> obs = observation(state, env.cfg);
  for (std::size_t t = 0; t < hp.horizon; ++t) {
    ActionSample a = policy.sample(obs, rng);
    Transition tr;
    tr.state_obs = obs;
    tr.log_prob_old = a.log_prob;
    SwarmState next = advance(state, a.action, env.cfg);
    tr.done_flag = step_status(next, env.cfg, hp.horizon);
    const double next_signal = composite_signal(next, env.mode, env.weights, env.cfg);
    tr.reward = next_signal - signal;
    tr.action = std::move(a.action);
    obs = observation(next, env.cfg);
    tr.next_state_obs = obs;
    const StepStatus status = tr.done_flag;
    traj.steps.push_back(std::move(tr));
    state = std::move(next);
    signal = next_signal;
    if (status != StepStatus::Running) break;
  }
  traj.final_state = state;
  return traj;
}

}  // namespace

RolloutBatch collect_rollouts(const EnvSpec& env, const GaussianPolicy& policy, const HyperParams& hp,
                              std::span<const SwarmState> sigma, std::uint64_t seed, std::uint64_t epoch) {
  if (sigma.empty()) throw Error(ErrorCode::EmptyInitialSet, "collect_rollouts: empty initial state set");
  RolloutBatch batch;
  batch.trajectories.resize(hp.episodes_per_batch);
  parallel_for(hp.episodes_per_batch, worker_count(hp, hp.episodes_per_batch), [&](std::size_t e) {
    Rng rng = make_rng(seed, Stream::Rollout, {epoch, e});
    std::uniform_int_distribution<std::size_t> pick(0, sigma.size() - 1);
    const SwarmState& start = sigma[pick(rng)];
    batch.trajectories[e] = run_episode(env, policy, hp, start, rng);
  });
  return batch;
}

std::vector<double> rewards_to_go(std::span<const double> rewards, double gamma, bool failure_terminal,
                                  double bootstrap_value) {
  std::vector<double> out(rewards.size());
  double running = failure_terminal ? 0.0 : bootstrap_value;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values, double gamma,
                        double lambda, bool failure_terminal) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1) throw Error(ErrorCode::DimensionMismatch, "gae: need T + 1 value predictions");
  std::vector<double> adv(T);
  double running = 0.0;
  for (std::size_t t = T; t-- > 0;) {
    const double next_v = (t + 1 == T && failure_terminal) ? 0.0 : values[t + 1];
    const double delta = rewards[t] + gamma * next_v - values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

void estimate_advantages(RolloutBatch& batch, const ValueNet& value, const HyperParams& hp) {
  batch.advantages.clear();
  batch.rewards_to_go.clear();
  for (const Trajectory& traj : batch.trajectories) {
    const std::size_t T = traj.steps.size();
    if (T == 0) continue;
    std::vector<double> rewards(T);
    std::vector<double> values(T + 1);
    for (std::size_t t = 0; t < T; ++t) {
      rewards[t] = traj.steps[t].reward;
      values[t] = value.predict(traj.steps[t].state_obs);
    }
    values[T] = value.predict(traj.steps.back().next_state_obs);
    const bool failed = traj.failed();
    auto adv = gae(rewards, values, hp.gamma, hp.lambda, failed);
    auto rtg = hp.discounted_rewards_to_go ? rewards_to_go(rewards, hp.gamma, failed, values[T])
                                           : rewards_to_go(rewards, 1.0, true);
    batch.advantages.insert(batch.advantages.end(), adv.begin(), adv.end());
    batch.rewards_to_go.insert(batch.rewards_to_go.end(), rtg.begin(), rtg.end());
  }
  batch.advantages_normalized = false;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  for (double& a : adv) a -= mean;
  if (adv.size() < 2) return;
  double var = 0.0;
  for (double a : adv) var += a * a;
  const double sd = std::sqrt(var / n);
  if (sd > 0.0)
    for (double& a : adv) a /= sd;
}

double clipped_term(double ratio, double advantage, double eps_c) {
  const double clipped = std::clamp(ratio, 1.0 - eps_c, 1.0 + eps_c);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

ObjectiveResult clipped_objective(const RolloutBatch& batch, const GaussianPolicy& policy, double eps_c,
                                  std::span<const std::size_t> indices) {
  const auto flat = batch.flat_index();
  if (batch.advantages.size() != flat.size())
    throw Error(ErrorCode::DimensionMismatch, "clipped_objective: advantages not computed for this batch");
  std::vector<std::size_t> owned;
  if (indices.empty()) {
    owned = all_indices(flat.size());
    indices = owned;
  }
  ObjectiveResult res;
  res.grads = policy.zero_grads();
  if (indices.empty()) return res;
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  MlpTape tape;
  for (std::size_t i : indices) {
    const auto [e, t] = flat[i];
    const Transition& tr = batch.trajectories[e].steps[t];
    const double adv = batch.advantages[i];
    const double lp_new = policy.log_prob(tr.state_obs, tr.action, tape);
    const double ratio = std::exp(lp_new - tr.log_prob_old);
    const double unclipped = ratio * adv;
    const double term = clipped_term(ratio, adv, eps_c);
    res.objective += term * inv_n;
    // The clipped branch is constant in the parameters; only the unclipped
    // branch carries gradient.
    if (unclipped <= term) policy.backward_log_prob(tape, tr.action, adv * ratio * inv_n, res.grads);
  }
  return res;
}

ValueLossResult value_loss(const RolloutBatch& batch, const ValueNet& value, std::span<const std::size_t> indices) {
  const auto flat = batch.flat_index();
  if (batch.rewards_to_go.size() != flat.size())
    throw Error(ErrorCode::DimensionMismatch, "value_loss: rewards-to-go not computed for this batch");
  std::vector<std::size_t> owned;
  if (indices.empty()) {
    owned = all_indices(flat.size());
    indices = owned;
  }
  ValueLossResult res;
  res.grads = MlpParams(value.net.dims());
  if (indices.empty()) return res;
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  MlpTape tape;
  for (std::size_t i : indices) {
    const auto [e, t] = flat[i];
    const Transition& tr = batch.trajectories[e].steps[t];
    const double v = mlp_forward(value.net, tr.state_obs, &tape)[0];
    const double err = v - batch.rewards_to_go[i];
    res.loss += err * err * inv_n;
    const double upstream = 2.0 * err * inv_n;
    mlp_backward(value.net, tape, std::span<const double>(&upstream, 1), res.grads);
  }
  return res;
}

PhaseRun run_deterministic(const GaussianPolicy& policy, const EnvSpec& env, const SwarmState& start,
                           std::size_t horizon, const ConvergenceRule& rule, bool stop_on_regress) {
  PhaseRun run;
  SwarmState state = start;
  state.step_index = 0;
  run.states.push_back(state);
  double signal = composite_signal(state, env.mode, env.weights, env.cfg);
  std::size_t quiet = 0;
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<double> mean = policy.mean(observation(state, env.cfg));
    SwarmState next = advance(state, mean, env.cfg);
    const StepStatus status = step_status(next, env.cfg, horizon);
    const double next_signal = composite_signal(next, env.mode, env.weights, env.cfg);
    const double reward = next_signal - signal;
    if (stop_on_regress && reward < 0.0) break;
    for (double& v : mean) v = std::clamp(v, env.cfg.v_min, env.cfg.v_max);
    run.actions.push_back(std::move(mean));
    run.rewards.push_back(reward);
    state = std::move(next);
    run.states.push_back(state);
    signal = next_signal;
    if (status == StepStatus::FailureTerminal) {
      run.collided = true;
      break;
    }
    quiet = std::abs(reward) < rule.eps_conv ? quiet + 1 : 0;
    if (quiet >= rule.k_consecutive) {
      run.converged = true;
      break;
    }
  }
  return run;
}

TrainResult train_policy(std::span<const SwarmState> sigma, const HyperParams& hp, const EnvSpec& env,
                         std::uint64_t seed, const ConvergenceRule& rule, const EpochCallback& on_epoch) {
  if (sigma.empty()) throw Error(ErrorCode::EmptyInitialSet, "train_policy: empty initial state set");
  hp.validate();
  env.cfg.validate();
  for (const SwarmState& s : sigma)
    if (s.size() != env.cfg.n) throw Error(ErrorCode::DimensionMismatch, "train_policy: initial state robot count");

  const std::size_t dim = 2 * env.cfg.n;
  const double init_std = hp.initial_std > 0.0 ? hp.initial_std : 0.5 * (env.cfg.v_max - env.cfg.v_min) / 2.0;
  Rng init_rng = make_rng(seed, Stream::NetworkInit);
  TrainResult res;
  res.policy = GaussianPolicy::create(dim, dim, hp.hidden, init_std, init_rng);
  res.value = ValueNet::create(dim, hp.hidden, init_rng);
  for (double& w : res.policy.mean_net.weights(res.policy.mean_net.num_layers() - 1)) w *= hp.policy_output_scale;
  AdamState pol_net(res.policy.mean_net.size());
  AdamState pol_std(res.policy.log_std.size());
  AdamState val_net(res.value.net.size());

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const double eps_c = hp.eps_c_at(epoch);
    RolloutBatch batch = collect_rollouts(env, res.policy, hp, sigma, seed, epoch);
    estimate_advantages(batch, res.value, hp);
    normalize_advantages(batch.advantages);
    batch.advantages_normalized = true;

    EpochMetrics m;
    m.epoch = epoch;
    double returns = 0.0;
    for (const auto& traj : batch.trajectories) returns += traj.total_reward();
    m.mean_return = returns / static_cast<double>(batch.trajectories.size());
    m.mean_length = static_cast<double>(batch.total_steps()) / static_cast<double>(batch.trajectories.size());

    std::vector<std::size_t> order = all_indices(batch.total_steps());
    const std::size_t mb_count = std::min(hp.minibatches, std::max<std::size_t>(1, order.size()));
    std::size_t evaluations = 0;
    for (std::size_t ue = 0; ue < hp.update_epochs; ++ue) {
      Rng shuffle_rng = make_rng(seed, Stream::Minibatch, {epoch, ue});
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t mb = 0; mb < mb_count; ++mb) {
        const std::size_t lo = order.size() * mb / mb_count;
        const std::size_t hi = order.size() * (mb + 1) / mb_count;
        if (lo == hi) continue;
        std::span<const std::size_t> idx(order.data() + lo, hi - lo);
        ObjectiveResult obj = clipped_objective(batch, res.policy, eps_c, idx);
        ValueLossResult vl = value_loss(batch, res.value, idx);
        if (!std::isfinite(obj.objective) || !std::isfinite(vl.loss))
          throw Error(ErrorCode::NonFiniteLoss, fmt::format("training diverged at epoch {} (update {}, minibatch {}): "
                                                            "objective={} value_loss={}",
                                                            epoch, ue, mb, obj.objective, vl.loss));
        adam_update(res.policy.mean_net.values(), obj.grads.net.values(), pol_net, hp.alpha, Direction::Ascent);
        adam_update(res.policy.log_std, obj.grads.log_std, pol_std, hp.alpha, Direction::Ascent);
        adam_update(res.value.net.values(), vl.grads.values(), val_net, hp.beta, Direction::Descent);
        m.objective += obj.objective;
        m.value_loss += vl.loss;
        ++evaluations;
      }
    }
    if (evaluations > 0) {
      m.objective /= static_cast<double>(evaluations);
      m.value_loss /= static_cast<double>(evaluations);
    }
    res.metrics.push_back(m);
    if (on_epoch) on_epoch(m);
  }

  std::vector<PhaseRun> runs(sigma.size());
  parallel_for(sigma.size(), worker_count(hp, sigma.size()), [&](std::size_t i) {
    runs[i] = run_deterministic(res.policy, env, sigma[i], hp.horizon, rule);
  });
  for (const PhaseRun& r : runs)
    if (!r.collided) res.sigma_star.push_back(r.final_state());

  res.policy_moments = OptimizerMoments{pol_net, pol_std};
  res.value_moments = OptimizerMoments{val_net, std::nullopt};
  return res;
}

std::string metrics_csv(const std::vector<EpochMetrics>& rows) {
  std::string out = "epoch,mean_return,mean_length,objective,value_loss\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{}\n", r.epoch, r.mean_return, r.mean_length, r.objective, r.value_loss);
  return out;
}

std::vector<EpochMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,mean_return,mean_length,objective,value_loss")
    throw Error(ErrorCode::ParseFailure, "metrics CSV: unexpected header");
  std::vector<EpochMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochMetrics m;
    char c1, c2, c3, c4;
    std::istringstream ls(line);
    if (!(ls >> m.epoch >> c1 >> m.mean_return >> c2 >> m.mean_length >> c3 >> m.objective >> c4 >> m.value_loss) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
      throw Error(ErrorCode::ParseFailure, "metrics CSV: malformed row: " + line);
    rows.push_back(m);
  }
  return rows;
}

}  // namespace fatswarm
