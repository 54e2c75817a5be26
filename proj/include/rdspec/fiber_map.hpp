#pragma once

// Full-branch piecewise-affine circle maps f_w of degree d.
//
// Branch j maps [b_{j-1}, b_j) onto [0,1) increasingly. Each branch is split
// into affine pieces; on a piece the inverse-branch Lipschitz constant L(x)
// is 1/slope, so L is piecewise constant and evaluated on half-open pieces.

#include <cstddef>
#include <string>
#include <vector>

#include "rdspec/circle.hpp"
#include "rdspec/precise.hpp"

namespace rdspec {

struct AffinePiece {
  double lo = 0.0;
  double hi = 0.0;
  double slope = 1.0;
  double image_lo = 0.0;
  int branch = 0;  // filled in by FiberMap

  double image_hi() const { return image_lo + slope * (hi - lo); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

struct Preimage {
  double x = 0.0;
  int branch = 0;
};

class FiberMap {
 public:
  /// Validates structure; throws ConfigError naming the offending branch.
  FiberMap(int degree, std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
           std::vector<Interval> contracting_region, double sigma, double L_bound, int q,
           std::string name = {});

  /// x -> 2x mod 1, no contracting region.
  static FiberMap doubling();
  /// Degree-4 map with a slope-0.9 piece on [0, 0.05).
  static FiberMap trap();

  const std::string& name() const { return name_; }
  int degree() const { return degree_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }
  const std::vector<Interval>& contracting_region() const { return contracting_; }
  double sigma() const { return sigma_; }
  double L_bound() const { return L_bound_; }
  int q() const { return q_; }

  double max_slope() const { return max_slope_; }
  double min_slope() const { return min_slope_; }

  /// Index of the half-open piece [lo, hi) containing x in [0,1).
  template <class T>
  std::size_t piece_index(const T& x) const;

  int branch_of(double x) const { return pieces_[piece_index(x)].branch; }

  template <class T>
  T apply(const T& x) const;

  /// The deg(f) points x with f(x) = y, one per branch in branch order.
  std::vector<Preimage> preimages(double y) const;

  /// L(x) = 1/slope of the piece containing x.
  double inverse_lipschitz(double x) const { return 1.0 / pieces_[piece_index(x)].slope; }
  double log_inverse_lipschitz_of_piece(std::size_t piece) const { return log_inv_slope_[piece]; }

  bool in_contracting_region(double x) const;
  bool has_contracting_region() const { return !contracting_.empty(); }

  /// Image length of the arc [u, u + len] (lifted; may exceed 1).
  template <class T>
  T image_length(const T& u, const T& len) const;

  /// Displacement s >= 0 such that f maps [u, u + s] onto an arc of image
  /// length `image_len`; the local inverse branch at u, walking forward.
  template <class T>
  T walk_forward(const T& u, const T& image_len) const;

  /// Same as walk_forward but toward decreasing x.
  template <class T>
  T walk_backward(const T& u, const T& image_len) const;

  /// Number of injectivity domains [b_{j-1}, b_j) meeting the contracting region.
  int branches_meeting_contracting_region() const;

 private:
  std::size_t next_piece(std::size_t i) const { return i + 1 == pieces_.size() ? 0 : i + 1; }
  std::size_t prev_piece(std::size_t i) const { return i == 0 ? pieces_.size() - 1 : i - 1; }

  std::string name_;
  int degree_ = 0;
  std::vector<double> breakpoints_;
  std::vector<AffinePiece> pieces_;
  std::vector<double> log_inv_slope_;
  std::vector<Interval> contracting_;
  double sigma_ = 1.0;
  double L_bound_ = 1.0;
  int q_ = 0;
  double max_slope_ = 0.0;
  double min_slope_ = 0.0;
};

template <class T>
std::size_t FiberMap::piece_index(const T& x) const {
  std::size_t lo = 0;
  std::size_t hi = pieces_.size();
  // Last piece whose lower end is <= x.
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (x < pieces_[mid].lo) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

template <class T>
T FiberMap::apply(const T& x) const {
  const AffinePiece& p = pieces_[piece_index(x)];
  T y(x);
  y -= p.lo;
  y *= p.slope;
  y += p.image_lo;
  return wrap(y);
}

template <class T>
T FiberMap::image_length(const T& u, const T& len) const {
  std::size_t i = piece_index(u);
  T pos(u);
  T remaining(len);
  T total = lift(0.0, u);
  for (std::size_t guard = 0; guard < 64 * pieces_.size() + 64; ++guard) {
    const AffinePiece& p = pieces_[i];
    T room = lift(p.hi, pos);
    room -= pos;
    if (!(room < remaining)) {
      T part(remaining);
      part *= p.slope;
      total += part;
      return total;
    }
    room *= p.slope;
    total += room;
    remaining += pos;
    remaining -= p.hi;
    i = next_piece(i);
    pos = lift(pieces_[i].lo, pos);
  }
  return total;
}

template <class T>
T FiberMap::walk_forward(const T& u, const T& image_len) const {
  std::size_t i = piece_index(u);
  T pos(u);
  T remaining(image_len);
  T s = lift(0.0, u);
  for (std::size_t guard = 0; guard < 64 * pieces_.size() + 64; ++guard) {
    const AffinePiece& p = pieces_[i];
    T room = lift(p.hi, pos);
    room -= pos;
    T avail(room);
    avail *= p.slope;
    if (!(avail < remaining)) {
      T step(remaining);
      step /= p.slope;
      s += step;
      return s;
    }
    s += room;
    remaining -= avail;
    i = next_piece(i);
    pos = lift(pieces_[i].lo, pos);
  }
  return s;
}

template <class T>
T FiberMap::walk_backward(const T& u, const T& image_len) const {
  std::size_t i = piece_index(u);
  T pos(u);
  if (!(pieces_[i].lo < pos)) {
    i = prev_piece(i);
    pos = lift(pieces_[i].hi, pos);
  }
  T remaining(image_len);
  T s = lift(0.0, u);
  for (std::size_t guard = 0; guard < 64 * pieces_.size() + 64; ++guard) {
    const AffinePiece& p = pieces_[i];
    T room(pos);
    room -= p.lo;
    T avail(room);
    avail *= p.slope;
    if (!(avail < remaining)) {
      T step(remaining);
      step /= p.slope;
      s += step;
      return s;
    }
    s += room;
    remaining -= avail;
    i = prev_piece(i);
    pos = lift(pieces_[i].hi, pos);
  }
  return s;
}

}  // namespace rdspec
