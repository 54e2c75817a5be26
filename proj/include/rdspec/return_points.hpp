#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rdspec/errors.hpp"
#include "rdspec/random_system.hpp"

namespace rdspec {

/// The component containing x of the intersection of f^{-k}_w B(f^k_w x, eps),
/// k = 0..n, as extents to the left and right of x.
struct DynamicalBall {
  double center = 0.0;
  std::size_t depth = 0;
  double radius = 0.0;
  Precise left;
  Precise right;

  Arc arc() const { return Arc::around(center, left.get_d(), right.get_d()); }
};

DynamicalBall dynamical_ball(const RandomSystem& sys, const BasePoint& w, const Precise& x,
                             std::size_t n, double eps);
DynamicalBall dynamical_ball(const RandomSystem& sys, const BasePoint& w, double x, std::size_t n,
                             double eps);

/// f^{-n_h}_w B(f^{n_h}_w z, delta) along z's branch itinerary. levels[k] holds
/// the extents of the pulled-back arc around f^k_w z, k = 0..n_h.
struct PreBall {
  std::size_t depth = 0;
  double delta = 0.0;
  std::vector<Precise> left;
  std::vector<Precise> right;
  /// max over k of log(extent at n_h - k) - log(delta) + c k / 2; <= 0 certifies
  /// the contraction e^{-ck/2}.
  double worst_certificate = -INFINITY;
};

/// Throws PreconditionError if n_h is not a c-hyperbolic time of (w, z) and
/// NumericalError if the contraction certificate fails.
PreBall hyperbolic_preball(const RandomSystem& sys, const BasePoint& w, const Precise& z,
                           std::size_t n_h, double delta);

struct ReturnPointOptions {
  double fixpoint_tol = 1e-10;
  std::size_t max_iter = 10000;
  std::size_t exactness_cap = 200;
  std::size_t min_search = 64;  // hyperbolic-time search reaches n + max(min_search, n/2)
  std::size_t max_halvings = 60;
  Bits guard = 128;
};

/// Orbit length a return-point query for n may inspect; random start points
/// must carry enough bits for this many steps.
inline std::size_t query_horizon(std::size_t n, const ReturnPointOptions& options = {}) {
  return n + std::max(options.min_search, n / 2) + options.exactness_cap;
}

struct ReturnPointTrace {
  std::size_t hyperbolic_time = 0;
  std::size_t covering_steps = 0;
  std::size_t contraction_iterations = 0;
  double gamma = 0.0;
  std::size_t halvings = 0;
};

struct ReturnPointResult {
  Precise p_precise;
  double p = 0.0;
  std::size_t n = 0;
  double eps = 0.0;
  std::size_t period = 0;  // m = n + K
  std::size_t K = 0;
  double shadow_error = 0.0;
  double fixpoint_residual = 0.0;
  ReturnPointTrace trace;
};

enum class ReturnFailure { search_horizon, exactness, contraction, certificate };

class ReturnPointError : public NumericalError {
 public:
  ReturnPointError(ReturnFailure kind, const std::string& what)
      : NumericalError(what), kind_(kind) {}
  ReturnFailure kind() const { return kind_; }

 private:
  ReturnFailure kind_;
};

ReturnPointResult find_return_point(const RandomSystem& sys, const BasePoint& w, const Precise& x,
                                    std::size_t n, double eps,
                                    const ReturnPointOptions& options = {});
ReturnPointResult find_return_point(const RandomSystem& sys, const BasePoint& w, double x,
                                    std::size_t n, double eps,
                                    const ReturnPointOptions& options = {});

struct ReturnPointCheck {
  double shadow_error = 0.0;
  double fixpoint_residual = 0.0;
  bool ok = false;
};

/// Re-iterates p and x from scratch at fresh precision; uses only p, m, n, eps.
ReturnPointCheck verify_return_point(const RandomSystem& sys, const BasePoint& w,
                                     const Precise& x, const ReturnPointResult& result,
                                     double fixpoint_tol = 1e-10);

struct SpecificationRow {
  std::size_t n = 0;
  double eps = 0.0;
  std::size_t samples = 0;
  double median_K_over_n = 0.0;
  double p90_K_over_n = 0.0;
  double failure_rate = 0.0;
};

/// Median and 90th percentile (nearest rank) of K/n over fresh samples for each
/// n; failed samples are counted and excluded from the quantiles.
std::vector<SpecificationRow> specification_statistics(const RandomSystem& sys,
                                                       std::size_t sample_size,
                                                       const std::vector<std::size_t>& n_schedule,
                                                       double eps, unsigned jobs = 1,
                                                       const ReturnPointOptions& options = {});

}  // namespace rdspec
