#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fatswarm/config.hpp"
#include "fatswarm/error.hpp"
#include "fatswarm/io.hpp"

using namespace fatswarm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fatswarm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::size_t count(const std::string& text, const std::string& needle);

std::size_t robot_discs(const std::string& svg) {
  return count(svg, "fill=\"#2e8b57\" stroke=\"black\"") + count(svg, "fill=\"#d9534f\" stroke=\"black\"");
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

EpisodeTrace sample_trace(std::size_t n, std::size_t steps, std::size_t aux_from) {
  EpisodeTrace t;
  SwarmState s;
  for (std::size_t i = 0; i < n; ++i) s.positions.push_back({3.0 * i - 4.0, 0.5 * i});
  t.states.push_back(s);
  for (std::size_t k = 0; k < steps; ++k) {
    for (auto& p : s.positions) p.x += 0.125;
    s.step_index = k + 1;
    t.states.push_back(s);
    t.actions.push_back(std::vector<double>(2 * n, 0.125));
    t.rewards.push_back(0.01 * static_cast<double>(k) - 0.003);
    t.phases.push_back(k < aux_from ? 0 : 1);
  }
  return t;
}

}  // namespace

TEST_CASE("presets mirror the experiment table") {
  struct Golden {
    const char* id;
    std::size_t n;
    RewardMode mode;
    InitialKind kind;
  };
  const Golden table[] = {{"A", 6, RewardMode::PredefinedPoint, InitialKind::Packed},
                          {"B", 8, RewardMode::PredefinedPoint, InitialKind::Scattered},
                          {"C", 10, RewardMode::PredefinedPoint, InitialKind::Distributed},
                          {"D", 6, RewardMode::UndefinedPoint, InitialKind::Packed},
                          {"E", 8, RewardMode::UndefinedPoint, InitialKind::Scattered},
                          {"F", 10, RewardMode::UndefinedPoint, InitialKind::Distributed}};
  CHECK(preset_ids() == std::vector<std::string>{"A", "B", "C", "D", "E", "F"});
  for (const Golden& g : table) {
    const ExperimentConfig c = preset(g.id);
    CHECK(c.id == g.id);
    CHECK(c.swarm.n == g.n);
    CHECK(c.mode == g.mode);
    CHECK(c.init.kind == g.kind);
    CHECK(c.init.epsilon == 2.0 * c.swarm.r_bot);
    if (g.mode == RewardMode::UndefinedPoint)
      CHECK(std::isinf(c.swarm.r_scan));
    else
      CHECK(c.swarm.r_scan == 6.0);
  }
  CHECK(code_of([] { (void)preset("Z"); }) == ErrorCode::UnknownExperiment);
}

TEST_CASE("config JSON round-trip and partial files") {
  ExperimentConfig c = preset("E");
  c.ppo.epochs = 3;
  c.discovery.aux_weights = SignalWeights{0.1, 0.2, 0.3, 0.4, 0.5};
  const std::string text = config_to_json(c);
  CHECK(config_to_json(config_from_json(text)) == text);

  const ExperimentConfig partial = config_from_json(R"({"swarm": {"n": 3}, "ppo": {"epochs": 7}})");
  CHECK(partial.swarm.n == 3);
  CHECK(partial.ppo.epochs == 7);
  CHECK(partial.ppo.horizon == 400);

  CHECK(code_of([] { (void)config_from_json(R"({"swarm": {"radius": 3}})"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([] { (void)config_from_json("{not json"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([] { (void)config_from_json(R"({"swarm": {"n": "six"}})"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([] { (void)load_config("/nonexistent/config.json"); }) == ErrorCode::ConfigParse);
}

TEST_CASE("config overrides") {
  ExperimentConfig c;
  set_config_value(c, "ppo.epochs", "12");
  set_config_value(c, "reward.mode", "undefined_point");
  set_config_value(c, "swarm.r_scan", "null");
  CHECK(c.ppo.epochs == 12);
  CHECK(c.mode == RewardMode::UndefinedPoint);
  CHECK(std::isinf(c.swarm.r_scan));
  CHECK(code_of([&] { set_config_value(c, "ppo.nope", "1"); }) == ErrorCode::ConfigParse);
  CHECK(code_of([&] { set_config_value(c, "epochs", "1"); }) == ErrorCode::ConfigParse);

  const std::map<std::string, std::string> vars{{"FATSWARM_SWARM_N", "5"}, {"FATSWARM_INIT_KIND", "scattered"}};
  const auto applied = apply_env_overrides(c, [&](const char* name) -> const char* {
    auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  });
  CHECK(applied.size() == 2);
  CHECK(c.swarm.n == 5);
  CHECK(c.init.kind == InitialKind::Scattered);
}

TEST_CASE("trajectory JSON lines round-trip") {
  const std::vector<EpisodeTrace> eps{sample_trace(3, 4, 2), sample_trace(3, 1, 5)};
  std::ostringstream out;
  write_trajectories(out, eps);
  const std::string text = out.str();
  CHECK(count(text, "\n") == (4 + 1) + (1 + 1));
  CHECK(count(text, "\"phase\":\"aux\"") == 2);
  CHECK(count(text, "\"phase\":\"initial\"") == 2);

  std::istringstream in(text);
  const auto back = read_trajectories(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].states == eps[0].states);
  CHECK(back[0].rewards == eps[0].rewards);
  CHECK(back[0].actions == eps[0].actions);
  CHECK(back[0].phases == eps[0].phases);
  CHECK(back[1].steps() == 1);
  CHECK(phase_name(0) == "base");
  CHECK(phase_name(1) == "aux");
  CHECK(phase_name(2) == "aux2");
}

TEST_CASE("malformed trajectory lines are reported by number") {
  std::ostringstream out;
  write_trajectories(out, {sample_trace(2, 3, 3)});
  std::string text = out.str();
  // Break the third line.
  std::size_t pos = 0;
  for (int k = 0; k < 2; ++k) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{oops");
  std::istringstream in(text);
  try {
    (void)read_trajectories(in);
    FAIL("expected a parse failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseFailure);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("bench CSV") {
  const std::vector<BenchRow> rows{{"A", 1, 110.25, 4.0, 114.25, 0.95, 1}, {"custom", 18446744073709551615ull, 0, 0, 0, 0, 0}};
  const std::string text = bench_csv(rows);
  CHECK(text.substr(0, text.find('\n')) == kBenchHeader);
  CHECK(parse_bench_csv(text) == rows);
  CHECK(bench_csv(parse_bench_csv(text)) == text);
  CHECK(parse_bench_csv(bench_csv({})).empty());
  CHECK(code_of([] { (void)parse_bench_csv("wrong,header\n"); }) == ErrorCode::ParseFailure);

  PatternVerdict v;
  v.episodes = {EpisodeVerdict{true, true, 10, 2}, EpisodeVerdict{false, false, 5, 0}};
  const BenchRow row = bench_row(v, "X", 3);
  CHECK(row.steps_base == 7.5);
  CHECK(row.steps_aux == 1.0);
  CHECK(row.steps_total == row.steps_base + row.steps_aux);
  CHECK(row.success_rate == 0.5);
  CHECK(row.collisions == 1);
}

TEST_CASE("SVG frames") {
  ExperimentConfig cfg = preset("A");
  const auto trace = sample_trace(6, 1, 1);
  const std::string svg = render_svg(trace.states[0], cfg, RenderOptions{});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(robot_discs(svg) == 6);
  const std::string rings = render_svg(trace.states[0], cfg, RenderOptions{true, true});
  CHECK(robot_discs(rings) == 6);
  CHECK(count(rings, "stroke=\"#4a90d9\"") == 6);
  CHECK(count(rings, "<polygon") > 0);

  const auto dir = scratch_dir("render");
  const auto files = render_episode(trace, cfg, RenderOptions{}, dir);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "initial.svg");
  CHECK(files[1].filename() == "base-final.svg");
  const auto both = render_episode(sample_trace(6, 4, 2), cfg, RenderOptions{}, dir, "ep1-");
  CHECK(both.size() == 3);
  for (const auto& f : both) CHECK(fs::exists(f));
  fs::remove_all(dir);
}

TEST_CASE("chain bundles round-trip") {
  ExperimentConfig cfg;
  cfg.swarm.n = 2;
  cfg.ppo.hidden = {8};
  PolicyChain chain;
  for (std::uint64_t k = 0; k < 2; ++k) {
    Rng rng(k);
    chain.policies.push_back(GaussianPolicy::create(4, 4, {8}, 0.25, rng));
    chain.values.push_back(ValueNet::create(4, {8}, rng));
  }
  chain.horizons = {400, 64};
  chain.switch_criterion = {2e-4, 7};

  const auto dir = scratch_dir("bundle");
  save_chain(dir / "b", chain, cfg);
  const LoadedChain back = load_chain(dir / "b");
  CHECK(back.chain.size() == 2);
  CHECK(back.chain.policies[1] == chain.policies[1]);
  CHECK(back.chain.values[0] == chain.values[0]);
  CHECK(back.chain.horizons == chain.horizons);
  CHECK(back.chain.switch_criterion.eps_conv == 2e-4);
  CHECK(back.chain.switch_criterion.k_consecutive == 7);
  CHECK(config_to_json(back.config) == config_to_json(cfg));

  CHECK(code_of([&] { (void)load_chain(dir / "absent"); }) == ErrorCode::MissingCheckpoint);
  fs::remove(dir / "b" / "policy_1.ckpt");
  CHECK(code_of([&] { (void)load_chain(dir / "b"); }) == ErrorCode::MissingCheckpoint);
  fs::remove_all(dir);
}

TEST_CASE("verdict report") {
  PatternVerdict v;
  v.valid = true;
  v.episodes = {EpisodeVerdict{true, true, 12, 3, 1.0, 2.0, 2.5}};
  const std::string j = verdict_json(v, "A", 7, 2);
  CHECK(j.find("\"valid\": true") != std::string::npos);
  CHECK(j.find("\"chain_length\": 2") != std::string::npos);
  CHECK(j.find("\"steps_aux\": 3") != std::string::npos);
}
