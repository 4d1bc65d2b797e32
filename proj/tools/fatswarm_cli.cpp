// Command-line front end; talks to the library only through its C interface.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fatswarm/fatswarm.h"

namespace {

struct ConfigHandle {
  fs_config* ptr = nullptr;
  ~ConfigHandle() { fs_config_free(ptr); }
};

int report(fs_status s) {
  if (s == FS_OK) return 0;
  std::fprintf(stderr, "fatswarm: %s: %s\n", fs_status_name(s), fs_last_error());
  return static_cast<int>(s);
}

// --config wins over --experiment; both fall back to the defaults. Env
// overrides and --set pairs apply last, in that order.
fs_status build_config(const std::string& path, const std::string& experiment, const std::vector<std::string>& sets,
                       ConfigHandle& out) {
  fs_status s = FS_OK;
  if (!path.empty())
    s = fs_config_load(path.c_str(), &out.ptr);
  else if (!experiment.empty())
    s = fs_config_from_experiment(experiment.c_str(), &out.ptr);
  else
    s = fs_config_default(&out.ptr);
  if (s != FS_OK) return s;
  if ((s = fs_config_apply_env(out.ptr)) != FS_OK) return s;
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "fatswarm: --set expects section.key=value, got '%s'\n", kv.c_str());
      return FS_ERR_INVALID_ARGUMENT;
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if ((s = fs_config_set(out.ptr, key.c_str(), value.c_str())) != FS_OK) return s;
  }
  return FS_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swarm pattern discovery for fat opaque robots"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fs_version()));

  std::string config_path, experiment, out_dir = "out";
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
  std::size_t episodes = 0;
  bool quiet = false;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--experiment", experiment, "Experiment preset (A-F)");
    cmd->add_option("--set", sets, "Override a config value, section.key=value");
  };
  auto add_common_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Root seed")->capture_default_str();
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_flag("--quiet", quiet, "No progress output");
  };

  CLI::App* train = app.add_subcommand("train", "Train one policy and write its checkpoints and metrics");
  add_config_flags(train);
  add_common_flags(train);

  CLI::App* discover = app.add_subcommand("discover", "Train a base/auxiliary chain and validate its patterns");
  add_config_flags(discover);
  add_common_flags(discover);

  std::string bundle;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a chain bundle on fresh initial states");
  evaluate->add_option("bundle", bundle, "Chain bundle directory")->required();
  evaluate->add_option("--episodes", episodes, "Episodes (0 = the bundle's configured count)");
  add_common_flags(evaluate);

  std::vector<std::string> bundles;
  CLI::App* bench = app.add_subcommand("bench", "Mean step counts per chain bundle, written as bench.csv");
  bench->add_option("bundles", bundles, "Chain bundle directories")->required();
  bench->add_option("--episodes", episodes, "Episodes per bundle (default: the configured count)");
  add_common_flags(bench);

  std::string trajectories;
  bool rings = false, shading = false, all_episodes = false;
  long episode_index = 0;
  CLI::App* render = app.add_subcommand("render", "SVG snapshots of a trajectory file");
  render->add_option("trajectories", trajectories, "JSON-lines trajectory file")->required();
  add_config_flags(render);
  render->add_option("--out", out_dir, "Output directory")->capture_default_str();
  render->add_option("--episode", episode_index, "Episode to render")->capture_default_str();
  render->add_flag("--all", all_episodes, "Render every episode");
  render->add_flag("--scan-rings", rings, "Draw scan-radius rings");
  render->add_flag("--shading", shading, "Shade occlusion as seen from robot 0");
  render->add_flag("--quiet", quiet, "No progress output");

  CLI11_PARSE(app, argc, argv);

  const int q = quiet ? 1 : 0;
  if (*train || *discover) {
    ConfigHandle cfg;
    if (fs_status s = build_config(config_path, experiment, sets, cfg); s != FS_OK) return report(s);
    return report(*train ? fs_train(cfg.ptr, seed, out_dir.c_str(), q) : fs_discover(cfg.ptr, seed, out_dir.c_str(), q));
  }
  if (*evaluate) return report(fs_evaluate(bundle.c_str(), episodes, seed, out_dir.c_str(), q));
  if (*bench) {
    std::vector<const char*> dirs;
    for (const auto& b : bundles) dirs.push_back(b.c_str());
    const bool use_default = bench->count("--episodes") == 0;
    return report(fs_bench(dirs.data(), dirs.size(), episodes, use_default ? 1 : 0, seed, out_dir.c_str(), q));
  }
  if (*render) {
    ConfigHandle cfg;
    if (fs_status s = build_config(config_path, experiment, sets, cfg); s != FS_OK) return report(s);
    fs_render_options opts{rings ? 1 : 0, shading ? 1 : 0, all_episodes ? -1 : episode_index};
    return report(fs_render(trajectories.c_str(), cfg.ptr, out_dir.c_str(), &opts, q));
  }
  return 0;
}
