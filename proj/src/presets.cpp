#include "rdspec/presets.hpp"

namespace rdspec {

RandomSystem doubling_system(double c, std::uint64_t seed) {
  return RandomSystem::single(FiberMap::doubling(), 0.5, c, 0.9, seed);
}

RandomSystem trap_system(std::uint64_t seed) {
  return RandomSystem::single(FiberMap::trap(), 0.5, 0.02, 0.95, seed);
}

RandomSystem mixed_system(std::uint64_t seed) {
  return RandomSystem(BaseEnvironment({0.2, 0.8}, seed), {FiberMap::trap(), FiberMap::doubling()},
                      0.5, 0.02, 0.95);
}

}  // namespace rdspec
