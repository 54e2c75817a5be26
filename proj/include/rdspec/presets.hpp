#pragma once

// The shipped example systems. configs/*.json mirror these exactly.

#include <cstdint>

#include "rdspec/random_system.hpp"

namespace rdspec {

inline constexpr std::uint64_t kShippedSeed = 42;

/// Doubling map alone; epsilon0 = 0.5, rho = 0.9.
RandomSystem doubling_system(double c = 0.03, std::uint64_t seed = kShippedSeed);

/// Trap map alone; epsilon0 = 0.5, c = 0.02, rho = 0.95.
RandomSystem trap_system(std::uint64_t seed = kShippedSeed);

/// Symbol 0 = trap (weight 0.2), symbol 1 = doubling (weight 0.8);
/// epsilon0 = 0.5, c = 0.02, rho = 0.95.
RandomSystem mixed_system(std::uint64_t seed = kShippedSeed);

}  // namespace rdspec
