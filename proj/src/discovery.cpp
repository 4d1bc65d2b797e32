#include "fatswarm/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fatswarm/error.hpp"

namespace fatswarm {

double DiscountSchedule::at(std::size_t run) const {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "discount schedule is empty");
  return values[std::min(run, values.size() - 1)];
}

void DiscountSchedule::validate() const {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "discount schedule is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0 && values[i] <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "discount schedule values must lie in (0, 1]");
    if (i > 0 && values[i] > values[i - 1])
      throw Error(ErrorCode::InvalidArgument, "discount schedule must be nonincreasing");
  }
}

DiscountSchedule discount_schedule_default() { return DiscountSchedule{{0.99, 0.90}}; }

std::size_t DiscoveryConfig::horizon_at(std::size_t run) const {
  if (horizons.empty()) throw Error(ErrorCode::InvalidArgument, "discovery: no horizons configured");
  return horizons[std::min(run, horizons.size() - 1)];
}

void DiscoveryConfig::validate() const {
  schedule.validate();
  if (horizons.empty() || std::find(horizons.begin(), horizons.end(), 0u) != horizons.end())
    throw Error(ErrorCode::InvalidArgument, "discovery: horizons must be positive");
  if (sigma_size == 0) throw Error(ErrorCode::InvalidArgument, "discovery: sigma_size must be positive");
  if (max_chain == 0) throw Error(ErrorCode::InvalidArgument, "discovery: max_chain must be positive");
  if (min_chain == 0 || min_chain > max_chain)
    throw Error(ErrorCode::InvalidArgument, "discovery: min_chain must lie in [1, max_chain]");
  if (eval_episodes == 0) throw Error(ErrorCode::InvalidArgument, "discovery: eval_episodes must be positive");
}

double PatternVerdict::success_rate() const {
  if (episodes.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& e : episodes) ok += (e.collision_free && e.goal) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(episodes.size());
}

std::size_t PatternVerdict::collisions() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.collision_free ? 0 : 1;
  return n;
}

PatternVerdict validate_patterns(std::vector<EpisodeTrace> trajectories, const EnvSpec& env) {
  if (trajectories.empty()) throw Error(ErrorCode::InvalidArgument, "validate_patterns: no trajectories");
  PatternVerdict verdict;
  verdict.valid = true;
  for (const EpisodeTrace& tr : trajectories) {
    if (tr.states.empty()) throw Error(ErrorCode::InvalidArgument, "validate_patterns: empty trajectory");
    EpisodeVerdict ev;
    ev.collision_free = std::none_of(tr.states.begin(), tr.states.end(),
                                     [&](const SwarmState& s) { return has_collision(s, env.cfg); });
    ev.goal = goal_reached(tr.states.back(), env.mode, env.cfg, env.goal);
    for (std::size_t p : tr.phases) (p == 0 ? ev.steps_base : ev.steps_aux) += 1;
    ev.signal_initial = composite_signal(tr.states.front(), env.mode, env.weights, env.cfg);
    ev.signal_final = composite_signal(tr.states.back(), env.mode, env.weights, env.cfg);
    ev.signal_base_final = composite_signal(tr.states[ev.steps_base], env.mode, env.weights, env.cfg);
    verdict.valid = verdict.valid && ev.collision_free && ev.goal;
    verdict.episodes.push_back(ev);
  }
  verdict.trajectories = std::move(trajectories);
  return verdict;
}

EpisodeTrace run_chain_episode(const PolicyChain& chain, const EnvSpec& env, const SwarmState& start) {
  EpisodeTrace trace;
  SwarmState state = start;
  state.step_index = 0;
  trace.states.push_back(state);
  for (std::size_t p = 0; p < chain.size(); ++p) {
    const std::size_t horizon = chain.horizons.empty() ? 400 : chain.horizons[std::min(p, chain.horizons.size() - 1)];
    PhaseRun run = run_deterministic(chain.policies[p], env, state, horizon, chain.switch_criterion, p > 0);
    for (std::size_t t = 0; t < run.steps(); ++t) {
      SwarmState s = run.states[t + 1];
      s.step_index = trace.steps() + 1;
      trace.states.push_back(std::move(s));
      trace.actions.push_back(run.actions[t]);
      trace.rewards.push_back(run.rewards[t]);
      trace.phases.push_back(p);
    }
    if (run.collided) break;
    state = trace.states.back();
  }
  return trace;
}

PatternVerdict evaluate_chain(const PolicyChain& chain, const InitialConfig& init, const EnvSpec& env,
                              std::size_t episodes, std::uint64_t seed) {
  if (chain.size() == 0) throw Error(ErrorCode::InvalidArgument, "evaluate_chain: empty chain");
  if (episodes == 0) return PatternVerdict{};
  std::vector<EpisodeTrace> traces(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng = make_rng(seed, Stream::Evaluation, {e});
    traces[e] = run_chain_episode(chain, env, reset(init, env.cfg, rng));
  }
  return validate_patterns(std::move(traces), env);
}

const char* to_string(DiscoveryFailureReason r) {
  return r == DiscoveryFailureReason::SigmaExhausted ? "no valid pattern formation trajectory was discovered"
                                                     : "chain reached its maximum length without valid patterns";
}

std::vector<SwarmState> sample_initial_states(const InitialConfig& init, const SwarmConfig& cfg, std::size_t count,
                                              std::uint64_t seed) {
  std::vector<SwarmState> states;
  states.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, Stream::InitialSet, {i});
    states.push_back(reset(init, cfg, rng));
  }
  return states;
}

DiscoveryOutcome run_discovery(const InitialConfig& init, const HyperParams& hp, const EnvSpec& env,
                               const DiscoveryConfig& dc, std::uint64_t seed, const DiscoveryCallback& progress) {
  dc.validate();
  DiscoveryOutcome out;
  out.chain.switch_criterion = dc.convergence;
  std::vector<SwarmState> sigma = sample_initial_states(init, env.cfg, dc.sigma_size, seed);

  for (std::size_t run = 0; !sigma.empty(); ++run) {
    HyperParams run_hp = hp;
    run_hp.gamma = dc.schedule.at(run);
    run_hp.horizon = dc.horizon_at(run);
    EnvSpec run_env = env;
    if (run > 0 && dc.aux_weights) run_env.weights = *dc.aux_weights;

    out.sigma_sizes.push_back(sigma.size());
    EpochCallback on_epoch;
    if (progress)
      on_epoch = [&](const EpochMetrics& m) { progress(DiscoveryProgress{run, &m, nullptr}); };
    TrainResult trained = train_policy(sigma, run_hp, run_env, derive_seed(seed, {run}), dc.convergence, on_epoch);
    out.chain.policies.push_back(std::move(trained.policy));
    out.chain.values.push_back(std::move(trained.value));
    out.chain.horizons.push_back(run_hp.horizon);
    out.metrics.push_back(std::move(trained.metrics));
    sigma = std::move(trained.sigma_star);

    out.verdict = evaluate_chain(out.chain, init, env, dc.eval_episodes, derive_seed(seed, {run, 0xE7A1}));
    if (progress) progress(DiscoveryProgress{run, nullptr, &out.verdict});
    if (out.verdict.valid && out.chain.size() >= dc.min_chain) return out;
    if (out.chain.size() >= dc.max_chain) break;
  }
  out.failure = sigma.empty() ? DiscoveryFailureReason::SigmaExhausted : DiscoveryFailureReason::ChainCap;
  return out;
}

}  // namespace fatswarm
