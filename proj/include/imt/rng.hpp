#pragma once

#include <cstdint>
#include <random>

namespace imt {

using Rng = std::mt19937_64;

/// Uniform draw in [0,1) built directly from the generator output, so that
/// a fixed seed yields the same stream on every platform (the standard
/// distributions are implementation-defined).
inline double next_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t next_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(next_unit(rng) * static_cast<double>(n)) % n;
}

}  // namespace imt
