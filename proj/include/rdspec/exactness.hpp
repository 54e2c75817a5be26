#pragma once

#include <cstddef>

#include "rdspec/random_system.hpp"

namespace rdspec {

inline constexpr std::size_t kDefaultExactnessCap = 200;

/// Pushes the lifted arc [start, start + length] through f. Returns the new
/// length; `start` is replaced by f(start). Lengths >= 1 mean full coverage.
template <class T>
T push_arc(const FiberMap& f, T& start, const T& length) {
  T image = f.image_length(start, length);
  start = f.apply(start);
  return image;
}

/// Smallest n with f^n_w(B(x, eps)) = S^1. Throws NumericalError
/// ("exactness not certified within max_iter") past the cap.
std::size_t exactness_time(const RandomSystem& sys, const BasePoint& w, double x, double eps,
                           std::size_t max_iter = kDefaultExactnessCap);

}  // namespace rdspec
