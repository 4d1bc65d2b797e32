#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fatswarm/config.hpp"
#include "fatswarm/discovery.hpp"
#include "fatswarm/io.hpp"

namespace fatswarm {

struct RunOptions {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
  /// Overrides the episode count of evaluate and bench.
  std::optional<std::size_t> episodes;
  bool quiet = false;
  /// Progress sink; standard error when null.
  std::ostream* log = nullptr;
};

// Each command writes its files under opts.out_dir:
//   train     policy.ckpt, value.ckpt, metrics.csv, config.json
//   discover  bundle/ (chain), verdict.json, trajectories.jsonl,
//             metrics_<run>.csv, config.json
//   evaluate  verdict.json, trajectories.jsonl
//   bench     bench.csv
//   render    initial.svg and <phase>-final.svg per rendered episode

TrainResult cmd_train(const ExperimentConfig& cfg, const RunOptions& opts);

/// Writes every output, then throws DiscoveryFailure when no chain was accepted.
DiscoveryOutcome cmd_discover(const ExperimentConfig& cfg, const RunOptions& opts);

PatternVerdict cmd_evaluate(const std::filesystem::path& bundle, const RunOptions& opts);

/// One row per bundle, in the given order.
std::vector<BenchRow> cmd_bench(const std::vector<std::filesystem::path>& bundles, const RunOptions& opts);

/// Renders one episode, or all when `episode` is empty (files then carry an
/// "ep<k>-" prefix).
std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& trajectories, const ExperimentConfig& cfg,
                                              const RenderOptions& render, const RunOptions& opts,
                                              std::optional<std::size_t> episode = 0);

}  // namespace fatswarm
