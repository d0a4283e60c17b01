#pragma once

#include <cstdint>
#include <random>

namespace tlpvol {

using Rng = std::mt19937_64;

/// Counter-based seed derivation: hashes (master, index) through two rounds
/// of splitmix64 finalisation. Streams derived for different indices are
/// unrelated and can be generated in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

inline Rng make_rng(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

/// Standard symmetric alpha-stable variate (unit scale, characteristic
/// function exp(-|t|^alpha)) by the Chambers-Mallows-Stuck transform.
double standard_symmetric_stable(Rng& rng, double alpha);

}  // namespace tlpvol
