#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qot {

using Rng = std::mt19937_64;

/// Derive an independent seed for a named stream from a root seed.
/// The derivation is a pure function, so module-level seeds are reproducible
/// from the single --seed the user passes.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

/// Derive the seed for the k-th replica (restart, trajectory, ...) of a stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index);

inline Rng make_rng(std::uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

}  // namespace qot
