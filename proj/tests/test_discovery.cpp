#include <cmath>

#include "doctest.h"
#include "fatswarm/discovery.hpp"
#include "fatswarm/error.hpp"

using namespace fatswarm;

namespace {

EnvSpec small_env(std::size_t n) {
  SwarmConfig cfg;
  cfg.n = n;
  return EnvSpec::make(cfg, RewardMode::PredefinedPoint);
}

GaussianPolicy random_policy(std::size_t n, std::uint64_t seed, double out_scale) {
  Rng rng(seed);
  GaussianPolicy p = GaussianPolicy::create(2 * n, 2 * n, {16}, 0.25, rng);
  for (double& w : p.mean_net.weights(p.mean_net.num_layers() - 1)) w *= out_scale;
  return p;
}

PolicyChain chain_of(std::vector<GaussianPolicy> ps, std::vector<std::size_t> horizons) {
  PolicyChain c;
  c.policies = std::move(ps);
  c.horizons = std::move(horizons);
  return c;
}

HyperParams quick_hp() {
  HyperParams hp;
  hp.epochs = 2;
  hp.episodes_per_batch = 4;
  hp.update_epochs = 1;
  hp.minibatches = 1;
  hp.hidden = {8};
  hp.workers = 1;
  return hp;
}

DiscoveryConfig quick_dc() {
  DiscoveryConfig dc;
  dc.horizons = {30, 10};
  dc.sigma_size = 4;
  dc.eval_episodes = 3;
  return dc;
}

}  // namespace

TEST_CASE("default discount schedule") {
  const auto s = discount_schedule_default();
  REQUIRE(s.values.size() == 2);
  CHECK(s.at(0) == 0.99);
  CHECK(s.at(1) == 0.90);
  CHECK(s.values[1] <= s.values[0]);
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS((DiscountSchedule{{0.9, 0.99}}.validate()), Error);
  CHECK_THROWS_AS(DiscountSchedule{{1.2}}.validate(), Error);
}

TEST_CASE("discovery configuration defaults") {
  const DiscoveryConfig dc;
  CHECK(dc.sigma_size == 32);
  CHECK(dc.max_chain == 2);
  CHECK(dc.convergence.eps_conv == 1e-4);
  CHECK(dc.convergence.k_consecutive == 10);
  CHECK(dc.horizon_at(0) == 400);
  CHECK(dc.horizon_at(1) == 64);
  CHECK(dc.horizon_at(5) == 64);
  DiscoveryConfig bad;
  bad.min_chain = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("a motionless single-policy chain converges in k steps") {
  const EnvSpec env = small_env(3);
  GaussianPolicy still{MlpParams({6, 6}), std::vector<double>(6, 0.0)};
  const auto chain = chain_of({still}, {400});
  const auto v = evaluate_chain(chain, InitialConfig{InitialKind::Packed, 2.0, 0}, env, 4, 11);
  REQUIRE(v.episodes.size() == 4);
  for (const auto& e : v.episodes) {
    CHECK(e.steps_base == chain.switch_criterion.k_consecutive);
    CHECK(e.steps_aux == 0);
    CHECK(e.collision_free);
  }
}

TEST_CASE("phase bookkeeping and the auxiliary never lowers the signal") {
  const EnvSpec env = small_env(4);
  const InitialConfig init{InitialKind::Packed, 2.0, 0};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto chain = chain_of({random_policy(4, seed, 1.0), random_policy(4, seed + 100, 1.0)}, {60, 30});
    const auto v = evaluate_chain(chain, init, env, 5, seed);
    REQUIRE(v.trajectories.size() == v.episodes.size());
    for (std::size_t e = 0; e < v.episodes.size(); ++e) {
      const auto& ep = v.episodes[e];
      const auto& tr = v.trajectories[e];
      CHECK(ep.steps_base + ep.steps_aux == tr.steps());
      CHECK(tr.states.size() == tr.steps() + 1);
      CHECK(tr.phases.size() == tr.steps());
      for (std::size_t t = 0; t < tr.steps(); ++t) CHECK(tr.phases[t] == (t < ep.steps_base ? 0u : 1u));
      if (ep.collision_free) CHECK(ep.signal_final >= ep.signal_base_final - 1e-9);
      if (v.valid) CHECK(ep.collision_free);
    }
  }
}

TEST_CASE("pattern validation") {
  const EnvSpec env = small_env(2);
  SwarmState good;
  good.positions = {{-1.5, 0.0}, {1.5, 0.0}};
  SwarmState bad;
  bad.positions = {{-0.5, 0.0}, {0.5, 0.0}};

  EpisodeTrace ok;
  ok.states = {good, good};
  ok.actions = {{0, 0, 0, 0}};
  ok.rewards = {0.0};
  ok.phases = {0};
  EpisodeTrace crash = ok;
  crash.states = {good, bad, good};
  crash.actions = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  crash.rewards = {0.0, 0.0};
  crash.phases = {0, 0};

  const auto v1 = validate_patterns({ok, ok}, env);
  CHECK(v1.valid);
  CHECK(v1.success_rate() == 1.0);
  const auto v2 = validate_patterns({ok, crash}, env);
  CHECK_FALSE(v2.valid);
  CHECK_FALSE(v2.episodes[1].collision_free);
  CHECK(v2.collisions() == 1);
  CHECK_THROWS_AS(validate_patterns({}, env), Error);
}

TEST_CASE("chain cap without a valid verdict is reported as a failure") {
  EnvSpec env = small_env(2);
  env.goal.rho_g = 1e-3;  // unreachable
  DiscoveryConfig dc = quick_dc();
  dc.max_chain = 1;
  const auto out = run_discovery(InitialConfig{InitialKind::Packed, 2.0, 0}, quick_hp(), env, dc, 5);
  REQUIRE(out.failure.has_value());
  CHECK(*out.failure == DiscoveryFailureReason::ChainCap);
  CHECK(out.chain.size() == 1);
  CHECK_FALSE(out.verdict.valid);
}

TEST_CASE("discovery is reproducible and respects the chain length bounds") {
  const EnvSpec env = small_env(2);
  DiscoveryConfig dc = quick_dc();
  dc.min_chain = 2;
  const InitialConfig init{InitialKind::Packed, 2.0, 0};
  const auto a = run_discovery(init, quick_hp(), env, dc, 9);
  const auto b = run_discovery(init, quick_hp(), env, dc, 9);
  CHECK(a.chain.size() == b.chain.size());
  CHECK(a.chain.size() <= dc.max_chain);
  CHECK(a.failure == b.failure);
  REQUIRE(a.verdict.episodes.size() == b.verdict.episodes.size());
  for (std::size_t e = 0; e < a.verdict.episodes.size(); ++e) {
    CHECK(a.verdict.episodes[e].steps_base == b.verdict.episodes[e].steps_base);
    CHECK(a.verdict.episodes[e].steps_aux == b.verdict.episodes[e].steps_aux);
  }
  for (std::size_t r = 0; r < a.chain.size(); ++r) CHECK(a.chain.policies[r] == b.chain.policies[r]);
  REQUIRE(a.sigma_sizes.size() == a.chain.size());
  CHECK(a.sigma_sizes[0] == dc.sigma_size);
  for (std::size_t r = 1; r < a.sigma_sizes.size(); ++r) CHECK(a.sigma_sizes[r] <= a.sigma_sizes[r - 1]);
}

TEST_CASE("initial state sets are seeded") {
  SwarmConfig cfg;
  cfg.n = 5;
  const InitialConfig init{InitialKind::Distributed, 2.0, 0};
  const auto a = sample_initial_states(init, cfg, 8, 3);
  CHECK(a == sample_initial_states(init, cfg, 8, 3));
  CHECK(a != sample_initial_states(init, cfg, 8, 4));
  for (const auto& s : a) CHECK_FALSE(has_collision(s, cfg));
}
