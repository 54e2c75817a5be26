#pragma once

// Circle S^1 = [0,1) with the wraparound metric, and arcs on it.

#include <cmath>

#include "rdspec/precise.hpp"

namespace rdspec {

inline constexpr double kPointTolerance = 1e-12;
inline constexpr double kInvariantTolerance = 1e-10;

/// Reduce to [0,1).
template <class T>
T wrap(T x) {
  x -= floor_of(x);
  if (!(x < lift(1.0, x))) x -= lift(1.0, x);
  if (is_negative(x)) x = lift(0.0, x);
  return x;
}

/// Geodesic distance min(|x-y|, 1-|x-y|).
template <class T>
T circle_distance(const T& x, const T& y) {
  T d(x);
  d -= y;
  d = wrap(d);
  T other = lift(1.0, d);
  other -= d;
  return other < d ? other : d;
}

/// Signed displacement from `from` to `to`, in [-1/2, 1/2).
template <class T>
T signed_offset(const T& from, const T& to) {
  T d(to);
  d -= from;
  d += lift(0.5, d);
  d = wrap(d);
  d -= lift(0.5, d);
  return d;
}

/// Closed arc [start, start + length] traversed counterclockwise.
/// A length of 1 or more denotes the whole circle.
struct Arc {
  double start = 0.0;
  double length = 0.0;

  static Arc whole() { return {0.0, 1.0}; }
  static Arc around(double center, double left, double right) {
    return {wrap(center - left), left + right};
  }

  bool is_whole() const { return length >= 1.0; }
  double end() const { return wrap(start + length); }

  bool contains(double x, double tol = 0.0) const {
    if (is_whole()) return true;
    double off = wrap(x - start);
    if (off <= length + tol) return true;
    return off >= 1.0 - tol;
  }

  /// True if `inner` lies inside this arc.
  bool contains(const Arc& inner, double tol = 0.0) const {
    if (is_whole()) return true;
    if (inner.is_whole()) return false;
    double off = wrap(inner.start - start);
    if (off > 1.0 - tol) off -= 1.0;
    return off >= -tol && off + inner.length <= length + tol;
  }
};

}  // namespace rdspec
