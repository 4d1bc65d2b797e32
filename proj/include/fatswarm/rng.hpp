#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fatswarm {

using Rng = std::mt19937_64;

// Stream tags. Every random draw in a run descends from one root seed through
// derive_seed(root, {tag, indices...}), so components never share a stream.
enum class Stream : std::uint64_t {
  NetworkInit = 1,
  InitialSet = 2,
  Rollout = 3,
  Minibatch = 4,
  Evaluation = 5,
  Bench = 6,
  EnvReset = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root, Stream stream, std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = derive_seed(root, {static_cast<std::uint64_t>(stream)});
  for (std::uint64_t i : indices) h = derive_seed(h, {i});
  return Rng(h);
}

}  // namespace fatswarm
