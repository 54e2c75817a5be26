#pragma once

// The skew product F(w, x) = (theta(w), f_w(x)) where f_w = fiber(w_0).

#include <cstddef>
#include <span>
#include <vector>

#include "rdspec/base_environment.hpp"
#include "rdspec/fiber_map.hpp"
#include "rdspec/precise.hpp"

namespace rdspec {

class RandomSystem {
 public:
  RandomSystem(BaseEnvironment base, std::vector<FiberMap> fibers, double epsilon0, double c,
               double rho);

  /// Single-symbol system with the given fiber map.
  static RandomSystem single(FiberMap f, double epsilon0, double c, double rho,
                             std::uint64_t seed = 0);

  const BaseEnvironment& base() const { return base_; }
  const std::vector<FiberMap>& fibers() const { return fibers_; }
  const FiberMap& fiber(Symbol s) const { return fibers_.at(static_cast<std::size_t>(s)); }
  const FiberMap& fiber_at(const BasePoint& w, std::int64_t j = 0) const {
    return fiber(base_.symbol(w, j));
  }

  double epsilon0() const { return epsilon0_; }
  double c() const { return c_; }
  double rho() const { return rho_; }

  /// deg(F) = max_s deg(f_s).
  int max_degree() const;
  double max_slope() const;

  std::vector<Symbol> word(const BasePoint& w, std::size_t n) const { return base_.word(w, n); }

  RandomSystem with_seed(std::uint64_t seed) const;
  RandomSystem with_exponent(double c) const;

 private:
  BaseEnvironment base_;
  std::vector<FiberMap> fibers_;
  double epsilon0_ = 0.0;
  double c_ = 0.0;
  double rho_ = 0.5;
};

/// A finite fiber orbit f^j_w(x), j = 0..n, reported in double precision.
/// Points are the true orbit of the start value, rounded.
struct Orbit {
  BasePoint base{};
  std::vector<Symbol> symbols;            // w_0 .. w_{n-1}
  std::vector<double> points;             // n + 1 entries
  std::vector<double> log_contractions;   // log L_{theta^j w}(f^j_w x), n entries
  std::vector<int> branch_itinerary;      // injectivity domain index visited at step j
  std::vector<std::size_t> piece_itinerary;

  std::size_t length() const { return log_contractions.size(); }
};

/// Orbit carried at full working precision.
struct PreciseOrbit {
  std::vector<Symbol> symbols;
  std::vector<Precise> points;
  std::vector<std::size_t> pieces;
  Bits precision = 0;

  Orbit to_orbit(const RandomSystem& sys, const BasePoint& base = {}) const;
};

/// Bits needed so that iterating along `word` keeps `guard` correct bits:
/// sum of ceil(log2 max slope) over the word, plus the guard and 64.
Bits required_precision(const RandomSystem& sys, std::span<const Symbol> word, Bits guard = 96);

/// True orbit of x along `word` at uniform precision `bits`.
PreciseOrbit iterate_precise(const RandomSystem& sys, std::span<const Symbol> word,
                             const Precise& x, Bits bits);

Orbit iterate_word(const RandomSystem& sys, std::span<const Symbol> word, const Precise& x);
Orbit iterate_word(const RandomSystem& sys, std::span<const Symbol> word, double x);

Orbit iterate(const RandomSystem& sys, const BasePoint& w, double x, std::size_t n);
Orbit iterate(const RandomSystem& sys, const BasePoint& w, const Precise& x, std::size_t n);

}  // namespace rdspec
