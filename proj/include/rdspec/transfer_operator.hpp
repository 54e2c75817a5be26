#pragma once

// Fiber transfer operators on a midpoint grid c_i = (i + 1/2)/G with periodic
// linear interpolation. The dual operator is the exact transpose of the
// discretized operator, so <psi, L* rho> = <L psi, rho> holds to rounding.

#include <cstddef>
#include <functional>
#include <vector>

#include "rdspec/random_system.hpp"

namespace rdspec {

inline constexpr std::size_t kDefaultResolution = 4096;

struct GridFunction {
  std::size_t resolution = 0;
  std::vector<double> values;

  static GridFunction constant(std::size_t G, double v);
  static GridFunction sample(std::size_t G, const std::function<double(double)>& psi);
  /// Linear interpolation between neighbouring cell centers (periodic).
  double at(double x) const;
};

struct GridMeasure {
  std::size_t resolution = 0;
  std::vector<double> masses;

  static GridMeasure lebesgue(std::size_t G);
  double total_mass() const;
  /// Mass of the closed arc, cells counted by fractional overlap.
  double arc_measure(const Arc& a) const;
  /// Same with each cell weighted by weight(cell center).
  double arc_integral(const Arc& a, const std::function<double(double)>& weight) const;
  GridMeasure normalized() const;
};

double pairing(const GridFunction& psi, const GridMeasure& rho);

/// Per-symbol potentials; an empty table means phi == 0.
struct Potential {
  std::vector<GridFunction> per_symbol;

  bool is_zero() const { return per_symbol.empty(); }
  /// e^{phi_s(y)}; exactly 1 when phi == 0.
  double weight(Symbol s, double y) const;
  double value(Symbol s, double y) const;
};

/// (L psi)(c_i) = sum over the deg(f) preimages y of c_i of e^{phi(y)} psi(y).
GridFunction apply_operator(const FiberMap& f, const Potential& phi, Symbol s,
                            const GridFunction& psi);
GridFunction apply_operator(const FiberMap& f, const GridFunction& psi);

/// Transpose of apply_operator.
GridMeasure dual_apply(const FiberMap& f, const Potential& phi, Symbol s, const GridMeasure& rho);
GridMeasure dual_apply(const FiberMap& f, const GridMeasure& rho);

/// lambda = sum_i (L 1)_i mu_next_i.
double lambda_of(const FiberMap& f, const Potential& phi, Symbol s, const GridMeasure& mu_next);
double lambda_of(const FiberMap& f, const GridMeasure& mu_next);

struct JacobianCheck {
  double lhs = 0.0;  // mu_next(f(A))
  double rhs = 0.0;  // int_A lambda e^{-phi} d mu
  double relative_error = 0.0;      // |lhs - rhs| / mu_next(S^1)
  double arc_relative_error = 0.0;  // |lhs - rhs| / max(lhs, rhs)
};

/// A must lie inside one injectivity domain; throws PreconditionError otherwise.
JacobianCheck jacobian_check(const FiberMap& f, const Potential& phi, Symbol s,
                             const GridMeasure& mu, const GridMeasure& mu_next, const Arc& A);
JacobianCheck jacobian_check(const FiberMap& f, const GridMeasure& mu, const GridMeasure& mu_next,
                             const Arc& A);

/// n-step form along a word: mu_n(f^n(A)) against int_A lambda^n e^{-S_n phi} d mu_0.
/// `measures` holds mu_0 .. mu_n, `lambdas` lambda_0 .. lambda_{n-1}.
JacobianCheck jacobian_check_word(const RandomSystem& sys, std::span<const Symbol> word,
                                  const std::vector<GridMeasure>& measures,
                                  const std::vector<double>& lambdas, const Arc& A);

struct ReferenceSequence {
  std::vector<GridMeasure> measures;  // mu_0 .. mu_T; mu_T is Lebesgue
  std::vector<double> lambdas;        // lambda_0 .. lambda_{T-1}
};

/// mu_j = L*_{w_j} mu_{j+1} / lambda_j backward from Lebesgue at the word's end.
/// Throws NumericalError on mass underflow.
ReferenceSequence reference_measure_sequence(const RandomSystem& sys, std::span<const Symbol> word,
                                             std::size_t G, const Potential& phi = {});

}  // namespace rdspec
