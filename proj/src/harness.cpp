#include "fatswarm/harness.hpp"

#include <iostream>

#include <fmt/format.h>

#include "fatswarm/error.hpp"

namespace fatswarm {

namespace {

class Reporter {
 public:
  explicit Reporter(const RunOptions& opts) : quiet_(opts.quiet), out_(opts.log ? *opts.log : std::cerr) {}

  template <class... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) {
    if (quiet_) return;
    out_ << fmt::format(f, std::forward<Args>(args)...) << '\n' << std::flush;
  }

 private:
  bool quiet_;
  std::ostream& out_;
};

void log_epoch(Reporter& report, std::size_t run, const EpochMetrics& m, std::size_t epochs) {
  if (m.epoch % 10 != 0 && m.epoch + 1 != epochs) return;
  report("run {} epoch {:>4}/{}  return {:+.4f}  length {:6.1f}  value loss {:.5f}", run, m.epoch + 1, epochs,
         m.mean_return, m.mean_length, m.value_loss);
}

void log_verdict(Reporter& report, const std::string& label, const PatternVerdict& v) {
  const BenchRow row = bench_row(v, "", 0);
  report("{}: success {:.2f}, collisions {}, steps base {:.1f} aux {:.1f}", label, row.success_rate, row.collisions,
         row.steps_base, row.steps_aux);
}

}  // namespace

TrainResult cmd_train(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  Reporter report(opts);
  ensure_directory(opts.out_dir);
  save_config(cfg, opts.out_dir / "config.json");

  const auto sigma = sample_initial_states(cfg.init, cfg.swarm, cfg.discovery.sigma_size, opts.seed);
  HyperParams hp = cfg.ppo;
  hp.gamma = cfg.discovery.schedule.at(0);
  TrainResult res = train_policy(sigma, hp, cfg.env(), derive_seed(opts.seed, {0}), cfg.discovery.convergence,
                                 [&](const EpochMetrics& m) { log_epoch(report, 0, m, hp.epochs); });

  Checkpoint pc = Checkpoint::of(res.policy);
  pc.moments = res.policy_moments;
  Checkpoint vc = Checkpoint::of(res.value);
  vc.moments = res.value_moments;
  save_checkpoint(opts.out_dir / "policy.ckpt", pc);
  save_checkpoint(opts.out_dir / "value.ckpt", vc);
  write_text(opts.out_dir / "metrics.csv", metrics_csv(res.metrics));
  report("trained: {} of {} start states reached a collision-free final state", res.sigma_star.size(), sigma.size());
  return res;
}

DiscoveryOutcome cmd_discover(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  Reporter report(opts);
  ensure_directory(opts.out_dir);
  save_config(cfg, opts.out_dir / "config.json");

  DiscoveryOutcome out = run_discovery(cfg.init, cfg.ppo, cfg.env(), cfg.discovery, opts.seed,
                                       [&](const DiscoveryProgress& p) {
                                         if (p.epoch) log_epoch(report, p.run, *p.epoch, cfg.ppo.epochs);
                                         if (p.verdict)
                                           log_verdict(report, fmt::format("chain of {}", p.run + 1), *p.verdict);
                                       });

  save_chain(opts.out_dir / "bundle", out.chain, cfg);
  for (std::size_t r = 0; r < out.metrics.size(); ++r)
    write_text(opts.out_dir / fmt::format("metrics_{}.csv", r), metrics_csv(out.metrics[r]));
  const std::string failure = out.failure ? to_string(*out.failure) : std::string();
  write_text(opts.out_dir / "verdict.json", verdict_json(out.verdict, cfg.id, opts.seed, out.chain.size(), failure));
  save_trajectories(opts.out_dir / "trajectories.jsonl", out.verdict.trajectories);

  if (out.failure) throw Error(ErrorCode::DiscoveryFailure, failure);
  report("accepted a chain of {} after evaluating {} episodes", out.chain.size(), out.verdict.episodes.size());
  return out;
}

PatternVerdict cmd_evaluate(const std::filesystem::path& bundle, const RunOptions& opts) {
  Reporter report(opts);
  const LoadedChain loaded = load_chain(bundle);
  const std::size_t episodes = opts.episodes.value_or(loaded.config.discovery.eval_episodes);
  PatternVerdict v = evaluate_chain(loaded.chain, loaded.config.init, loaded.config.env(), episodes, opts.seed);
  ensure_directory(opts.out_dir);
  write_text(opts.out_dir / "verdict.json", verdict_json(v, loaded.config.id, opts.seed, loaded.chain.size()));
  save_trajectories(opts.out_dir / "trajectories.jsonl", v.trajectories);
  log_verdict(report, loaded.config.id, v);
  return v;
}

std::vector<BenchRow> cmd_bench(const std::vector<std::filesystem::path>& bundles, const RunOptions& opts) {
  Reporter report(opts);
  std::vector<BenchRow> rows;
  for (const auto& dir : bundles) {
    const LoadedChain loaded = load_chain(dir);
    const std::size_t episodes = opts.episodes.value_or(loaded.config.bench_episodes);
    if (episodes == 0) continue;
    const PatternVerdict v = evaluate_chain(loaded.chain, loaded.config.init, loaded.config.env(), episodes, opts.seed);
    rows.push_back(bench_row(v, loaded.config.id, opts.seed));
    log_verdict(report, loaded.config.id, v);
  }
  ensure_directory(opts.out_dir);
  write_text(opts.out_dir / "bench.csv", bench_csv(rows));
  return rows;
}

std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& trajectories, const ExperimentConfig& cfg,
                                              const RenderOptions& render, const RunOptions& opts,
                                              std::optional<std::size_t> episode) {
  Reporter report(opts);
  const auto episodes = load_trajectories(trajectories);
  std::vector<std::filesystem::path> written;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    if (episode && *episode != e) continue;
    if (episodes[e].states.front().size() != cfg.swarm.n)
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("episode {} has {} robots, the config expects {}", e,
                              episodes[e].states.front().size(), cfg.swarm.n));
    const std::string prefix = episode ? std::string() : fmt::format("ep{}-", e);
    auto files = render_episode(episodes[e], cfg, render, opts.out_dir, prefix);
    written.insert(written.end(), files.begin(), files.end());
  }
  if (episode && *episode >= episodes.size())
    throw Error(ErrorCode::IndexOutOfRange,
                fmt::format("episode {} requested, the file holds {}", *episode, episodes.size()));
  report("wrote {} SVG files to {}", written.size(), opts.out_dir.string());
  return written;
}

}  // namespace fatswarm
