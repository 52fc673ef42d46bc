#pragma once

#include <cstdint>
#include <random>

namespace metabalance {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates child seeds derived from one run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for a named sub-stream of a run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Sub-stream ids shared by the trainers. The baseline batch order and the
/// meta-learning query order use the same id, so a degenerate meta config
/// (gamma = beta = 0, natural sampling) replays the baseline batch sequence.
namespace streams {
inline constexpr std::uint64_t primary_batches = 1;
inline constexpr std::uint64_t support_batches = 2;
inline constexpr std::uint64_t dropout = 3;
inline constexpr std::uint64_t resampling = 4;
inline constexpr std::uint64_t mixup = 5;
inline constexpr std::uint64_t model_init = 6;
}  // namespace streams

}  // namespace metabalance
