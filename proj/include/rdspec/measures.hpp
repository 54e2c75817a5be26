#pragma once

// Atomic measures on the circle, the Wasserstein-1 distance, Birkhoff and
// return-orbit averages, and Cesaro averages of skew-product pushforwards.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "json.hpp"
#include "rdspec/return_points.hpp"
#include "rdspec/transfer_operator.hpp"

namespace rdspec {

struct Atom {
  double position = 0.0;
  double weight = 0.0;
};

/// Atoms sorted by position in [0,1); atoms closer than kPointTolerance
/// (on the circle) are merged and their weights added.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  /// Throws PreconditionError on a nonpositive or non-finite weight.
  explicit AtomicMeasure(std::vector<Atom> atoms);

  static AtomicMeasure dirac(double x) { return AtomicMeasure({{x, 1.0}}); }
  /// Cell-center atoms carrying the grid masses (empty cells dropped).
  static AtomicMeasure from_grid(const GridMeasure& mu);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;
  bool is_normalized() const;
  AtomicMeasure normalized() const;
  /// Mass moved to the containing cell of a G-cell grid.
  GridMeasure discretize(std::size_t G) const;

 private:
  std::vector<Atom> atoms_;
};

/// Exact W1 on the circle: min over a of int |F_mu - F_nu - a| dx.
/// Throws PreconditionError unless both are normalized.
double wasserstein1(const AtomicMeasure& mu, const AtomicMeasure& nu);

struct GridDistance {
  double value = 0.0;
  double discretization_bound = 0.0;  // 1/(2G)
};

/// Atoms go to their containing cell; both sides are then cell-center atoms.
GridDistance wasserstein1(const GridMeasure& mu, const AtomicMeasure& nu);

class Observable {
 public:
  enum class Kind { constant, cosine, sine, piecewise_linear };

  static Observable constant(double c);
  static Observable cosine(int mode);
  static Observable sine(int mode);
  /// Periodic linear interpolation through (x_k, y_k); knots strictly
  /// increasing in [0,1). Throws PreconditionError otherwise.
  static Observable piecewise_linear(std::vector<std::pair<double, double>> knots);

  Kind kind() const { return kind_; }
  int mode() const { return mode_; }
  double operator()(double x) const;
  double lipschitz() const;
  double sup_norm() const;
  std::string label() const;

 private:
  Kind kind_ = Kind::constant;
  double value_ = 0.0;
  int mode_ = 0;
  std::vector<std::pair<double, double>> knots_;
};

/// (1/n) sum_{j<n} obs(points[j]); requires n <= points.size().
double birkhoff_average(const Orbit& orbit, const Observable& obs, std::size_t n);

/// Equal weights 1/m on f^j_w(p), j < m. Throws PreconditionError unless
/// f^m_w(p) returns to p within `tol`.
AtomicMeasure return_orbit_measure(const RandomSystem& sys, const ReturnPointResult& result,
                                   const BasePoint& w, double tol = kInvariantTolerance);

struct SumComparison {
  double difference = 0.0;
  double bound = 0.0;  // 2 K sup|obs| / n
};

/// Compares the (n+K)- and n-step averages along the return orbit and
/// throws AssertionFailure if the difference exceeds the bound.
SumComparison sum_comparison(const RandomSystem& sys, const BasePoint& w,
                             const ReturnPointResult& result, const Observable& obs);

struct DisintegrationApprox {
  std::size_t r = 0;
  AtomicMeasure nu;
  std::vector<double> return_points;  // one per arc, in arc order
  double w1 = 0.0;
  double mesh_bound = 0.0;        // 1/(2r)
  double placement_error = 0.0;   // max_i d(p_i, center_i)
  double discretization = 0.0;    // 1/(2G)
  double bound() const { return mesh_bound + placement_error + discretization; }
};

/// Splits S^1 into r equal arcs, places a return point of length n = 1 and
/// radius eps (default 1/(2r)) near each arc center and weights it by mu(P_i).
DisintegrationApprox atomic_disintegration_approx(const RandomSystem& sys, const GridMeasure& mu,
                                                  const BasePoint& w, std::size_t r,
                                                  double eps = 0.0,
                                                  const ReturnPointOptions& options = {});

/// W1((1/T) sum_{j<T} mu_j, target); throws PreconditionError on mixed resolutions.
GridDistance fiber_average_comparison(const std::vector<GridMeasure>& mu_sequence, std::size_t T,
                                      const AtomicMeasure& target);

/// Fiber part of a product start measure P x nu, positions held exactly.
struct KrylovStart {
  std::vector<mpq_class> positions;
  std::vector<double> weights;

  static KrylovStart from(const AtomicMeasure& nu);
  /// Atoms j/G of weight 1/G.
  static KrylovStart uniform(std::size_t G);
};

struct KrylovOptions {
  std::size_t base_samples = 4000;
  int max_mode = 3;  // Fourier modes m <= max_mode on the fiber
  unsigned jobs = 1;
};

struct KrylovRow {
  std::size_t n = 0;
  double defect = 0.0;
  double bound = 0.0;  // 2 max sup|phi| / n
  std::string worst;   // test observable attaining the defect
};

/// tau_n = (1/n) sum_{i<n} F^i_*(P x nu), Monte Carlo over base samples and
/// exact on fiber atoms. The defect is the sup over the test family
/// (cylinder [w_0 = s] or X) x (1, cos 2 pi m x, sin 2 pi m x) of
/// |int phi o F d tau_n - int phi d tau_n|. Throws AssertionFailure if a
/// defect exceeds its bound.
std::vector<KrylovRow> krylov_bogolioubov(const RandomSystem& sys, const KrylovStart& nu,
                                          const std::vector<std::size_t>& n_values,
                                          const KrylovOptions& options = {});

nlohmann::json to_json(const AtomicMeasure& mu);
nlohmann::json to_json(const GridMeasure& mu);

}  // namespace rdspec
