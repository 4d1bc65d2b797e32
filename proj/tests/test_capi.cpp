// Exercises the shared library through its C header only.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fatswarm/fatswarm.h"

namespace fs = std::filesystem;

namespace {

struct Cfg {
  fs_config* p = nullptr;
  ~Cfg() { fs_config_free(p); }
};

std::string json_of(const fs_config* c) {
  size_t needed = 0;
  CHECK(fs_config_to_json(c, nullptr, 0, &needed) == FS_ERR_BUFFER_TOO_SMALL);
  std::string buf(needed, '\0');
  REQUIRE(fs_config_to_json(c, buf.data(), buf.size(), &needed) == FS_OK);
  buf.resize(needed - 1);
  return buf;
}

void make_tiny(fs_config* c) {
  for (auto [k, v] : std::vector<std::pair<const char*, const char*>>{{"swarm.n", "2"},
                                                                     {"ppo.epochs", "1"},
                                                                     {"ppo.horizon", "20"},
                                                                     {"ppo.episodes_per_batch", "2"},
                                                                     {"ppo.update_epochs", "1"},
                                                                     {"ppo.minibatches", "1"},
                                                                     {"ppo.workers", "1"},
                                                                     {"network.hidden", "[8]"},
                                                                     {"discovery.horizons", "[20, 10]"},
                                                                     {"discovery.sigma_size", "3"},
                                                                     {"discovery.eval_episodes", "2"}})
    REQUIRE(fs_config_set(c, k, v) == FS_OK);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(fs_version()).size() > 0);
  CHECK(std::string(fs_status_name(FS_OK)) == "ok");
  CHECK(fs_config_default(nullptr) == FS_ERR_NULL_ARGUMENT);
  CHECK(std::string(fs_last_error()).size() > 0);

  fs_config* c = nullptr;
  CHECK(fs_config_from_experiment("Z", &c) == FS_ERR_UNKNOWN_EXPERIMENT);
  CHECK(c == nullptr);
  CHECK(fs_config_load("/nonexistent.json", &c) == FS_ERR_CONFIG_PARSE);
  fs_config_free(nullptr);
  fs_env_free(nullptr);
  fs_policy_free(nullptr);
}

TEST_CASE("configuration handles") {
  Cfg a;
  REQUIRE(fs_config_from_experiment("A", &a.p) == FS_OK);
  const std::string j = json_of(a.p);
  CHECK(j.find("\"id\": \"A\"") != std::string::npos);
  CHECK(fs_config_set(a.p, "ppo.bogus", "1") == FS_ERR_CONFIG_PARSE);
  CHECK(fs_config_set(a.p, "swarm.n", "3") == FS_OK);

  const fs::path path = fs::temp_directory_path() / "fatswarm_capi_cfg.json";
  REQUIRE(fs_config_save(a.p, path.c_str()) == FS_OK);
  Cfg b;
  REQUIRE(fs_config_load(path.c_str(), &b.p) == FS_OK);
  CHECK(json_of(a.p) == json_of(b.p));
  fs::remove(path);
}

TEST_CASE("environment stepping") {
  Cfg c;
  REQUIRE(fs_config_default(&c.p) == FS_OK);
  REQUIRE(fs_config_set(c.p, "swarm.n", "2") == FS_OK);
  fs_env* env = nullptr;
  REQUIRE(fs_env_create(c.p, 10, &env) == FS_OK);
  CHECK(fs_env_robots(env) == 2);
  REQUIRE(fs_env_reset(env, 3) == FS_OK);

  const double pos[] = {-3.0, 0.0, 3.0, 0.0};
  REQUIRE(fs_env_set_positions(env, pos, 4) == FS_OK);
  double before = 0, after = 0, reward = 0;
  int status = -1;
  REQUIRE(fs_env_signal(env, &before) == FS_OK);
  const double act[] = {0.5, 0.0, -0.5, 0.0};
  REQUIRE(fs_env_step(env, act, 4, &reward, &status) == FS_OK);
  REQUIRE(fs_env_signal(env, &after) == FS_OK);
  CHECK(reward == doctest::Approx(after - before).epsilon(1e-15));
  CHECK(status == FS_STEP_RUNNING);

  double out[4];
  REQUIRE(fs_env_positions(env, out, 4) == FS_OK);
  CHECK(out[0] == -2.5);
  CHECK(out[2] == 2.5);
  CHECK(fs_env_positions(env, out, 3) == FS_ERR_BUFFER_TOO_SMALL);
  REQUIRE(fs_env_observation(env, out, 4) == FS_OK);
  CHECK(out[0] == -2.5 / 20.0);
  CHECK(fs_env_step(env, act, 3, &reward, &status) == FS_ERR_DIMENSION_MISMATCH);

  // Drive the robots into each other.
  for (int k = 0; k < 6 && status == FS_STEP_RUNNING; ++k) REQUIRE(fs_env_step(env, act, 4, &reward, &status) == FS_OK);
  CHECK(status == FS_STEP_FAILURE);
  fs_env_free(env);
}

TEST_CASE("commands through the C interface") {
  Cfg c;
  REQUIRE(fs_config_default(&c.p) == FS_OK);
  make_tiny(c.p);
  const fs::path dir = fs::temp_directory_path() / "fatswarm_capi_run";
  fs::remove_all(dir);

  REQUIRE(fs_train(c.p, 4, (dir / "train").c_str(), 1) == FS_OK);
  fs_policy* pol = nullptr;
  REQUIRE(fs_policy_load((dir / "train" / "policy.ckpt").c_str(), &pol) == FS_OK);
  CHECK(fs_policy_obs_dim(pol) == 4);
  CHECK(fs_policy_act_dim(pol) == 4);
  const double obs[] = {0.1, 0.2, -0.3, 0.4};
  double a1[4], a2[4];
  REQUIRE(fs_policy_act(pol, obs, 4, a1, 4) == FS_OK);
  REQUIRE(fs_policy_act(pol, obs, 4, a2, 4) == FS_OK);
  for (int i = 0; i < 4; ++i) CHECK(a1[i] == a2[i]);
  CHECK(fs_policy_act(pol, obs, 3, a1, 4) == FS_ERR_DIMENSION_MISMATCH);
  fs_policy_free(pol);
  CHECK(fs_policy_load((dir / "nope.ckpt").c_str(), &pol) != FS_OK);

  const fs_status d = fs_discover(c.p, 7, (dir / "disc").c_str(), 1);
  CHECK((d == FS_OK || d == FS_ERR_DISCOVERY_FAILURE));
  const std::string bundle = (dir / "disc" / "bundle").string();
  REQUIRE(fs_evaluate(bundle.c_str(), 0, 1, (dir / "eval").c_str(), 1) == FS_OK);
  CHECK(fs::exists(dir / "eval" / "verdict.json"));

  const char* dirs[] = {bundle.c_str()};
  REQUIRE(fs_bench(dirs, 1, 2, 0, 1, (dir / "bench").c_str(), 1) == FS_OK);
  CHECK(slurp(dir / "bench" / "bench.csv").find("experiment,seed,") == 0);
  const char* missing[] = {"/nonexistent/bundle"};
  CHECK(fs_bench(missing, 1, 2, 0, 1, (dir / "bench").c_str(), 1) == FS_ERR_MISSING_CHECKPOINT);

  const fs_render_options opts{1, 1, 0};
  REQUIRE(fs_render((dir / "disc" / "trajectories.jsonl").c_str(), c.p, (dir / "svg").c_str(), &opts, 1) == FS_OK);
  CHECK(fs::exists(dir / "svg" / "initial.svg"));

  std::ofstream(dir / "bad.jsonl") << "{\"episode\":0}\nnot json\n";
  CHECK(fs_render((dir / "bad.jsonl").c_str(), nullptr, (dir / "svg").c_str(), &opts, 1) == FS_ERR_PARSE_FAILURE);
  CHECK(std::string(fs_last_error()).find("line 1") != std::string::npos);
  fs::remove_all(dir);
}
