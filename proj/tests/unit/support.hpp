#pragma once

// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls into the library's evaluation code paths.

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "rdspec/fiber_map.hpp"
#include "rdspec/random_system.hpp"

namespace oracle {

/// f(x) computed in exact rational arithmetic from the piece table.
inline mpq_class apply_exact(const rdspec::FiberMap& f, const mpq_class& x) {
  const auto& pieces = f.pieces();
  std::size_t chosen = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (mpq_class(pieces[i].lo) <= x) chosen = i;
  }
  const auto& p = pieces[chosen];
  mpq_class y = (x - mpq_class(p.lo)) * mpq_class(p.slope) + mpq_class(p.image_lo);
  while (y >= 1) y -= 1;
  while (y < 0) y += 1;
  return y;
}

/// Reference orbit: step-by-step composition along the symbols of w.
inline std::vector<mpq_class> orbit_exact(const rdspec::RandomSystem& sys,
                                          const std::vector<int>& word, mpq_class x) {
  std::vector<mpq_class> out{x};
  for (int s : word) {
    x = apply_exact(sys.fiber(s), x);
    out.push_back(x);
  }
  return out;
}

/// Lightweight reproducible generator for hand-rolled property tests.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

}  // namespace oracle

namespace oracle {

/// Pliss indices straight from the definition, O(N^2).
inline std::vector<std::size_t> pliss_brute(const std::vector<double>& a, double c1) {
  std::vector<std::size_t> out;
  for (std::size_t ni = 1; ni <= a.size(); ++ni) {
    bool ok = true;
    for (std::size_t n = 0; n < ni && ok; ++n) {
      long double s = 0.0L;
      for (std::size_t j = n + 1; j <= ni; ++j) s += a[j - 1];
      ok = s >= static_cast<long double>(c1) * static_cast<long double>(ni - n);
    }
    if (ok) out.push_back(ni);
  }
  return out;
}

/// Hyperbolic times straight from the product form of the definition.
inline std::vector<std::size_t> hyperbolic_brute(const std::vector<double>& logs, double c) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= logs.size(); ++n) {
    bool ok = true;
    long double window = 0.0L;
    for (std::size_t k = 1; k <= n && ok; ++k) {
      window += logs[n - k];
      ok = window <= -static_cast<long double>(c) * static_cast<long double>(k);
    }
    if (ok) out.push_back(n);
  }
  return out;
}

/// A random sequence meeting the Pliss preconditions. Dyadic entries when
/// `dyadic` so partial sums are exact and ties are frequent.
inline std::vector<double> pliss_input(Rng& rng, std::size_t N, double c2, double A, bool dyadic) {
  std::vector<double> a(N);
  for (double& v : a) {
    v = rng.uniform(-A, A);
    if (dyadic) v = std::floor(v * 64.0) / 64.0;
  }
  double total = 0.0;
  for (double v : a) total += v;
  while (total < c2 * static_cast<double>(N)) {
    const std::size_t j = static_cast<std::size_t>(rng.below(static_cast<int>(N)));
    total += A - a[j];
    a[j] = A;
  }
  return a;
}

}  // namespace oracle

namespace oracle {

/// Exact circle distance between rationals in [0,1).
inline mpq_class distance_exact(const mpq_class& a, const mpq_class& b) {
  mpq_class d = a - b;
  if (d < 0) d = -d;
  mpq_class other = 1 - d;
  return other < d ? other : d;
}

/// Every y in [lo, hi) (0 <= lo < hi <= 1) with f^m_w(y) = y for the word's
/// composition, by refining affine cylinders in exact rationals.
inline std::vector<mpq_class> periodic_points_exact(const rdspec::RandomSystem& sys,
                                                    const std::vector<int>& word,
                                                    const mpq_class& lo, const mpq_class& hi) {
  struct Cylinder {
    mpq_class lo, hi, a, b;  // current value z = a y + b in [0,1) for y in [lo, hi)
  };
  std::vector<Cylinder> cylinders{{lo, hi, 1, 0}};
  for (int s : word) {
    const rdspec::FiberMap& f = sys.fiber(s);
    std::vector<Cylinder> next;
    for (const Cylinder& c : cylinders) {
      const mpq_class z_lo = c.a * c.lo + c.b;
      const mpq_class z_hi = c.a * c.hi + c.b;
      for (const auto& p : f.pieces()) {
        const mpq_class p_lo(p.lo), p_hi(p.hi), slope(p.slope), image(p.image_lo);
        const mpq_class from = z_lo > p_lo ? z_lo : p_lo;
        const mpq_class to = z_hi < p_hi ? z_hi : p_hi;
        if (!(from < to)) continue;
        Cylinder piece{(from - c.b) / c.a, (to - c.b) / c.a, slope * c.a,
                       slope * (c.b - p_lo) + image};
        // Split where the image passes 1.
        const mpq_class w_lo = piece.a * piece.lo + piece.b;
        const mpq_class w_hi = piece.a * piece.hi + piece.b;
        if (w_hi <= 1) {
          next.push_back(piece);
        } else if (w_lo >= 1) {
          piece.b -= 1;
          next.push_back(piece);
        } else {
          const mpq_class cut = (1 - piece.b) / piece.a;
          next.push_back({piece.lo, cut, piece.a, piece.b});
          next.push_back({cut, piece.hi, piece.a, piece.b - 1});
        }
      }
    }
    cylinders = std::move(next);
  }
  std::vector<mpq_class> fixed;
  for (const Cylinder& c : cylinders) {
    if (c.a == 1) continue;
    const mpq_class y = c.b / (1 - c.a);
    if (y >= c.lo && y < c.hi) fixed.push_back(y);
  }
  return fixed;
}

/// Periodic points of f^m_w inside the ball B(x, eps).
inline std::vector<mpq_class> periodic_points_near(const rdspec::RandomSystem& sys,
                                                   const std::vector<int>& word,
                                                   const mpq_class& x, double eps) {
  const mpq_class e(eps);
  mpq_class lo = x - e, hi = x + e;
  std::vector<mpq_class> out;
  auto add = [&](const mpq_class& a, const mpq_class& b) {
    for (auto& y : periodic_points_exact(sys, word, a, b)) out.push_back(y);
  };
  if (lo < 0) {
    add(lo + 1, 1);
    lo = 0;
  }
  if (hi > 1) {
    add(0, hi - 1);
    hi = 1;
  }
  add(lo, hi);
  return out;
}

/// True iff d(f^i y, f^i x) < eps for 0 <= i <= n, in exact arithmetic.
inline bool in_dynamical_ball(const rdspec::RandomSystem& sys, const std::vector<int>& word,
                              mpq_class y, mpq_class x, std::size_t n, double eps) {
  const mpq_class e(eps);
  for (std::size_t i = 0; i <= n; ++i) {
    if (!(distance_exact(y, x) < e)) return false;
    if (i == n) break;
    y = apply_exact(sys.fiber(word[i]), y);
    x = apply_exact(sys.fiber(word[i]), x);
  }
  return true;
}

}  // namespace oracle
