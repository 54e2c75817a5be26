#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "rdspec/random_system.hpp"

namespace rdspec {

/// count >= rho n and count > rho n, with rho n compared up to 1e-9 so that
/// decimal rho (e.g. 0.95 * 20) lands on the intended integer.
inline bool at_least_fraction(std::size_t count, std::size_t n, double rho) {
  return static_cast<double>(count) >= rho * static_cast<double>(n) - 1e-9;
}
inline bool more_than_fraction(std::size_t count, std::size_t n, double rho) {
  return static_cast<double>(count) > rho * static_cast<double>(n) + 1e-9;
}

/// All indices n_i in 1..N0 with sum_{j=n+1}^{n_i} a_j >= c1 (n_i - n) for every
/// 0 <= n < n_i. Throws PreconditionError naming the failed inequality unless
/// 0 < c1 < c2 < A, a_j <= A and sum a_j >= c2 N0.
std::vector<std::size_t> pliss_times(std::span<const double> a, double c1, double c2, double A);

/// zeta = (c2 - c1) / (A - c1).
inline double pliss_zeta(double c1, double c2, double A) { return (c2 - c1) / (A - c1); }

struct HyperbolicTimeRecord {
  double c = 0.0;
  std::vector<std::size_t> times;
  std::size_t horizon = 0;
  double density_at_horizon = 0.0;
  std::vector<std::size_t> gaps;
  std::optional<std::size_t> first_time;
};

/// c-hyperbolic times over the orbit's horizon, via the running minimum of
/// S_n + c n. Ties count as hyperbolic.
HyperbolicTimeRecord hyperbolic_times(std::span<const double> log_contractions, double c);
HyperbolicTimeRecord hyperbolic_times(const Orbit& orbit, double c);

struct ExpansionProfile {
  std::vector<double> running;  // (1/n) S_n for n = 1..N
  double final_average = 0.0;
};

ExpansionProfile expansion_exponent(const Orbit& orbit);

/// (1/n) #{times <= n}; n must not exceed the horizon.
double density_of_times(const HyperbolicTimeRecord& record, std::size_t n);

struct NonlacunarityReport {
  std::vector<double> ratios;  // (n_{i+1} - n_i) / gamma(n_i)
  double tail_fraction = 0.25;
  double tail_max = 0.0;
};

using Gauge = std::function<double(double)>;

NonlacunarityReport nonlacunarity(const HyperbolicTimeRecord& record, const Gauge& gamma = {},
                                  double tail_fraction = 0.25);

struct FirstTimeStats {
  std::size_t sample_size = 0;
  std::size_t horizon = 0;
  double c = 0.0;
  std::vector<std::size_t> histogram;  // histogram[n] = #{n_1 = n}, n = 1..horizon
  std::size_t censored = 0;            // no hyperbolic time within the horizon
  double mean = 0.0;                   // over uncensored samples
  std::vector<double> tail;            // tail[n] = P(n_1 > n), n = 0..horizon
};

/// Empirical law of n_1 over (w, x) ~ P x Lebesgue.
FirstTimeStats first_time_stats(const RandomSystem& sys, std::size_t sample_size,
                                std::size_t horizon, double c, unsigned jobs = 1);

struct ItineraryCount {
  std::size_t n = 0;
  double rho = 0.0;
  int k = 0;           // partition size deg(F)
  int q_hat = 0;
  int q_bar = 0;
  int p_hat = 0;
  bool exact = false;
  mpz_class strict_count;  // #I(rho, n) with "> rho n"
  mpz_class geq_count;     // same with ">= rho n"
  double strict_rate = 0.0;  // (1/n) log count
  double geq_rate = 0.0;
  double log_binomial_bound = 0.0;  // log sum_{g >= ceil(rho n)} C(n,g) q_hat^g p_hat^(n-g)
  double log_stirling_bound = 0.0;  // log C1 e^{2t(1-rho)n} q_hat^n p_hat^{(1-rho)n}
  double t = 0.0;
  double C1 = 1.0;
};

inline constexpr double kItineraryBudget = 2.0e4;

/// Counts itineraries along w's word. Exact (dynamic programming over the
/// number of good steps) when n log k <= budget; bounds are always filled.
ItineraryCount itinerary_count(const RandomSystem& sys, double rho, std::size_t n,
                               const BasePoint& w, double budget = kItineraryBudget);
ItineraryCount itinerary_count(const RandomSystem& sys, double rho, std::size_t n);

/// Fraction of grid points (i + 1/2)/G whose visit frequency to A_{theta^j w}
/// over j < n is >= rho; entry n-1 holds B_w(n), n = 1..N.
std::vector<double> bad_set_measure(const RandomSystem& sys, const BasePoint& w, double rho,
                                    std::size_t N, std::size_t grid_size);

/// Same, averaged over `w_samples` draws of w.
std::vector<double> bad_set_measure_averaged(const RandomSystem& sys, double rho, std::size_t N,
                                             std::size_t grid_size, std::size_t w_samples,
                                             unsigned jobs = 1);

/// Least-squares slope of log(values[n-1]) against n over the positive entries.
double log_slope(const std::vector<double>& values);

}  // namespace rdspec
