#pragma once

#include <cstdint>
#include <random>

namespace levyap {

using Stream = std::mt19937_64;

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Stream for trajectory `index` under `master_seed`: the engine is seeded with
// master_seed XOR (index * golden-ratio constant), so a stream depends only on
// the pair (seed, index) and never on scheduling.
Stream make_stream(std::uint64_t master_seed, std::uint64_t index);

// 53-bit uniform in [0, 1) from the high bits of a raw draw.
inline double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace levyap
