#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fatswarm/config.hpp"
#include "fatswarm/discovery.hpp"

namespace fatswarm {

// Trajectories as JSON lines. Each episode starts with a record for its
// initial state (phase "initial", empty action, reward 0), followed by one
// record per step:
//   {"episode":0,"step":1,"phase":"base","positions":[[x,y],...],"action":[...],"reward":r}
// Phases are "initial", "base" and "aux" ("aux2", ... for longer chains).

std::string phase_name(std::size_t phase);

void write_trajectories(std::ostream& out, const std::vector<EpisodeTrace>& episodes);

/// Throws ParseFailure naming the 1-based line of the first bad record.
std::vector<EpisodeTrace> read_trajectories(std::istream& in);

void save_trajectories(const std::filesystem::path& path, const std::vector<EpisodeTrace>& episodes);
std::vector<EpisodeTrace> load_trajectories(const std::filesystem::path& path);

/// Verdict report as JSON. `failure` is empty for an accepted chain.
std::string verdict_json(const PatternVerdict& verdict, const std::string& experiment, std::uint64_t seed,
                         std::size_t chain_length, const std::string& failure = {});

// Bench metrics CSV.

struct BenchRow {
  std::string experiment;
  std::uint64_t seed = 0;
  double steps_base = 0.0;
  double steps_aux = 0.0;
  double steps_total = 0.0;
  double success_rate = 0.0;
  std::size_t collisions = 0;

  bool operator==(const BenchRow&) const = default;
};

inline constexpr const char* kBenchHeader = "experiment,seed,steps_base,steps_aux,steps_total,success_rate,collisions";

BenchRow bench_row(const PatternVerdict& verdict, const std::string& experiment, std::uint64_t seed);
std::string bench_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_bench_csv(const std::string& text);

// SVG snapshots.

struct RenderOptions {
  bool scan_rings = false;
  bool occlusion_shading = false;
  double pixels_per_unit = 15.0;
};

/// One frame: the box, the goal region, and a circle per robot.
std::string render_svg(const SwarmState& state, const ExperimentConfig& cfg, const RenderOptions& opts,
                       const std::string& title = {});

/// Writes <prefix>initial.svg, then <phase>-final.svg for every phase present
/// in the episode. Returns the written paths.
std::vector<std::filesystem::path> render_episode(const EpisodeTrace& episode, const ExperimentConfig& cfg,
                                                  const RenderOptions& opts, const std::filesystem::path& out_dir,
                                                  const std::string& prefix = {});

// Chain bundles: a directory holding chain.json and policy_<i>.ckpt /
// value_<i>.ckpt for every policy in the chain.

void save_chain(const std::filesystem::path& dir, const PolicyChain& chain, const ExperimentConfig& cfg);

struct LoadedChain {
  PolicyChain chain;
  ExperimentConfig config;
};

/// Throws MissingCheckpoint when the bundle or one of its files is absent.
LoadedChain load_chain(const std::filesystem::path& dir);

/// Creates the directory (and parents); throws IoFailure on failure.
void ensure_directory(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fatswarm
