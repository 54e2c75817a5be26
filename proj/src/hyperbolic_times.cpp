#include "rdspec/hyperbolic_times.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdspec/errors.hpp"
#include "rdspec/parallel.hpp"
#include "rdspec/sampling.hpp"

namespace rdspec {

std::vector<std::size_t> pliss_times(std::span<const double> a, double c1, double c2, double A) {
  if (a.empty()) throw PreconditionError("pliss_times: sequence is empty");
  if (!(0.0 < c1)) throw PreconditionError("pliss_times: requires 0 < c1");
  if (!(c1 < c2)) throw PreconditionError("pliss_times: requires c1 < c2");
  if (!(c2 < A)) throw PreconditionError("pliss_times: requires c2 < A");
  long double total = 0.0L;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a[j] <= A)) {
      throw PreconditionError("pliss_times: requires a_j <= A (fails at j = " +
                              std::to_string(j + 1) + ")");
    }
    total += a[j];
  }
  if (!(total >= static_cast<long double>(c2) * static_cast<long double>(a.size()))) {
    throw PreconditionError("pliss_times: requires sum a_j >= c2 N0");
  }
  // n_i qualifies iff T_{n_i} >= max_{n < n_i} T_n with T_m = sum_{j<=m} (a_j - c1).
  std::vector<std::size_t> out;
  long double T = 0.0L;
  long double best = 0.0L;
  for (std::size_t m = 1; m <= a.size(); ++m) {
    T += static_cast<long double>(a[m - 1]) - c1;
    if (T >= best) out.push_back(m);
    best = std::max(best, T);
  }
  return out;
}

HyperbolicTimeRecord hyperbolic_times(std::span<const double> log_contractions, double c) {
  HyperbolicTimeRecord record;
  record.c = c;
  record.horizon = log_contractions.size();
  long double S = 0.0L;
  long double running_min = 0.0L;  // min_{m<n} (S_m + c m)
  for (std::size_t n = 1; n <= log_contractions.size(); ++n) {
    S += log_contractions[n - 1];
    const long double level = S + static_cast<long double>(c) * static_cast<long double>(n);
    if (level <= running_min) record.times.push_back(n);
    running_min = std::min(running_min, level);
  }
  for (std::size_t i = 1; i < record.times.size(); ++i) {
    record.gaps.push_back(record.times[i] - record.times[i - 1]);
  }
  if (!record.times.empty()) record.first_time = record.times.front();
  record.density_at_horizon =
      record.horizon == 0 ? 0.0
                          : static_cast<double>(record.times.size()) / record.horizon;
  return record;
}

HyperbolicTimeRecord hyperbolic_times(const Orbit& orbit, double c) {
  return hyperbolic_times(orbit.log_contractions, c);
}

ExpansionProfile expansion_exponent(const Orbit& orbit) {
  if (orbit.log_contractions.empty()) {
    throw PreconditionError("expansion_exponent: orbit length must be at least 1");
  }
  ExpansionProfile out;
  long double S = 0.0L;
  for (std::size_t n = 1; n <= orbit.log_contractions.size(); ++n) {
    S += orbit.log_contractions[n - 1];
    out.running.push_back(static_cast<double>(S / static_cast<long double>(n)));
  }
  out.final_average = out.running.back();
  return out;
}

double density_of_times(const HyperbolicTimeRecord& record, std::size_t n) {
  if (n > record.horizon) throw PreconditionError("density_of_times: n exceeds the horizon");
  if (n == 0) return 0.0;
  const auto count = std::upper_bound(record.times.begin(), record.times.end(), n) -
                     record.times.begin();
  return static_cast<double>(count) / static_cast<double>(n);
}

NonlacunarityReport nonlacunarity(const HyperbolicTimeRecord& record, const Gauge& gamma,
                                  double tail_fraction) {
  if (record.times.size() < 2) {
    throw PreconditionError("nonlacunarity: insufficient data (fewer than 2 hyperbolic times)");
  }
  NonlacunarityReport out;
  out.tail_fraction = tail_fraction;
  for (std::size_t i = 0; i + 1 < record.times.size(); ++i) {
    const double n_i = static_cast<double>(record.times[i]);
    const double g = gamma ? gamma(n_i) : n_i;
    out.ratios.push_back(static_cast<double>(record.times[i + 1] - record.times[i]) / g);
  }
  const std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * out.ratios.size())));
  out.tail_max = *std::max_element(out.ratios.end() - static_cast<std::ptrdiff_t>(tail),
                                   out.ratios.end());
  return out;
}

namespace {

// First c-hyperbolic time of the orbit of d.x along d.word, or 0 if none.
std::size_t first_hyperbolic_time(const RandomSystem& sys, const Draw& d, double c) {
  Precise x(d.x, required_precision(sys, d.word));
  x = d.x;
  long double S = 0.0L;
  long double running_min = 0.0L;
  for (std::size_t n = 1; n <= d.word.size(); ++n) {
    const FiberMap& f = sys.fiber(d.word[n - 1]);
    const std::size_t piece = f.piece_index(x);
    S += f.log_inverse_lipschitz_of_piece(piece);
    const long double level = S + static_cast<long double>(c) * static_cast<long double>(n);
    if (level <= running_min) return n;
    running_min = std::min(running_min, level);
    x = f.apply(x);
  }
  return 0;
}

}  // namespace

FirstTimeStats first_time_stats(const RandomSystem& sys, std::size_t sample_size,
                                std::size_t horizon, double c, unsigned jobs) {
  if (sample_size == 0) throw PreconditionError("first_time_stats: sample_size must be >= 1");
  std::vector<std::size_t> first(sample_size, 0);
  parallel_for(sample_size, jobs, [&](std::size_t i) {
    first[i] = first_hyperbolic_time(sys, draw_sample(sys, Stream::first_time, i, horizon), c);
  });
  FirstTimeStats out;
  out.sample_size = sample_size;
  out.horizon = horizon;
  out.c = c;
  out.histogram.assign(horizon + 1, 0);
  double total = 0.0;
  for (std::size_t n1 : first) {
    if (n1 == 0) {
      ++out.censored;
    } else {
      ++out.histogram[n1];
      total += static_cast<double>(n1);
    }
  }
  const std::size_t uncensored = sample_size - out.censored;
  out.mean = uncensored == 0 ? NAN : total / static_cast<double>(uncensored);
  std::size_t above = sample_size;
  for (std::size_t n = 0; n <= horizon; ++n) {
    if (n > 0) above -= out.histogram[n];
    out.tail.push_back(static_cast<double>(above) / static_cast<double>(sample_size));
  }
  return out;
}

namespace {

double log_binomial(std::size_t n, std::size_t g) {
  return std::lgamma(n + 1.0) - std::lgamma(g + 1.0) - std::lgamma(n - g + 1.0);
}

double log_sum_exp(const std::vector<double>& terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

double log_of(const mpz_class& z) {
  if (z == 0) return -std::numeric_limits<double>::infinity();
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, z.get_mpz_t());
  return std::log(mantissa) + static_cast<double>(exponent) * std::log(2.0);
}

}  // namespace

ItineraryCount itinerary_count(const RandomSystem& sys, double rho, std::size_t n,
                               const BasePoint& w, double budget) {
  if (n == 0) throw PreconditionError("itinerary_count: n must be >= 1");
  ItineraryCount out;
  out.n = n;
  out.rho = rho;
  out.k = sys.max_degree();
  out.q_hat = 0;
  out.q_bar = out.k;
  for (std::size_t s = 0; s < sys.fibers().size(); ++s) {
    if (sys.base().weights()[s] <= 0.0) continue;
    out.q_hat = std::max(out.q_hat, sys.fibers()[s].q());
    out.q_bar = std::min(out.q_bar, sys.fibers()[s].q());
  }
  out.p_hat = out.k - out.q_bar;

  const double nd = static_cast<double>(n);
  const double rho_n = rho * nd;
  const std::size_t g_min = static_cast<std::size_t>(std::max(0.0, std::ceil(rho_n - 1e-9)));

  std::vector<double> terms;
  for (std::size_t g = g_min; g <= n; ++g) {
    terms.push_back(log_binomial(n, g) + g * std::log(static_cast<double>(out.q_hat)) +
                    (n - g) * std::log(static_cast<double>(out.p_hat)));
  }
  out.log_binomial_bound = log_sum_exp(terms);

  // sum_{g >= rho n} C(n,g) <= e^{n H(rho)} for rho >= 1/2, and <= 2^n always.
  const double entropy =
      rho >= 0.5 && rho < 1.0 ? -(rho * std::log(rho) + (1.0 - rho) * std::log1p(-rho))
                              : std::log(2.0);
  out.C1 = 1.0;
  out.t = entropy / (2.0 * (1.0 - rho));
  out.log_stirling_bound = std::log(out.C1) + 2.0 * out.t * (1.0 - rho) * nd +
                           nd * std::log(static_cast<double>(out.q_hat)) +
                           (1.0 - rho) * nd * std::log(static_cast<double>(out.p_hat));

  out.exact = nd * std::log(static_cast<double>(out.k)) <= budget;
  if (out.exact) {
    // ways[g] = # itineraries with exactly g steps in the first q_j domains.
    std::vector<mpz_class> ways(n + 1, 0);
    ways[0] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      const int q = sys.fiber_at(w, static_cast<std::int64_t>(j)).q();
      const unsigned long good = static_cast<unsigned long>(q);
      const unsigned long bad = static_cast<unsigned long>(out.k - q);
      for (std::size_t g = j + 2; g-- > 0;) {
        mpz_class next = ways[g] * bad;
        if (g > 0) next += ways[g - 1] * good;
        ways[g] = next;
      }
    }
    out.strict_count = 0;
    out.geq_count = 0;
    for (std::size_t g = 0; g <= n; ++g) {
      if (more_than_fraction(g, n, rho)) out.strict_count += ways[g];
      if (at_least_fraction(g, n, rho)) out.geq_count += ways[g];
    }
    out.strict_rate = log_of(out.strict_count) / nd;
    out.geq_rate = log_of(out.geq_count) / nd;
  }
  return out;
}

ItineraryCount itinerary_count(const RandomSystem& sys, double rho, std::size_t n) {
  return itinerary_count(sys, rho, n, sys.base().origin());
}

std::vector<double> bad_set_measure(const RandomSystem& sys, const BasePoint& w, double rho,
                                    std::size_t N, std::size_t grid_size) {
  if (grid_size < 1000) throw PreconditionError("bad_set_measure: grid_size must be >= 1000");
  const std::vector<Symbol> word = sys.word(w, N);
  const Bits bits = required_precision(sys, word);
  // A point with more than (1 - rho) N misses can no longer be in any B_w(n), n <= N.
  const double miss_budget = (1.0 - rho) * static_cast<double>(N);
  std::vector<std::size_t> inside(N, 0);
  for (std::size_t i = 0; i < grid_size; ++i) {
    Precise x(2 * static_cast<long>(i) + 1, bits);
    x /= 2 * static_cast<long>(grid_size);
    std::size_t visits = 0;
    for (std::size_t n = 1; n <= N; ++n) {
      const FiberMap& f = sys.fiber(word[n - 1]);
      if (f.has_contracting_region() && f.in_contracting_region(x.get_d())) ++visits;
      if (at_least_fraction(visits, n, rho)) ++inside[n - 1];
      if (static_cast<double>(n - visits) > miss_budget + 1e-9) break;
      x = f.apply(x);
    }
  }
  std::vector<double> out(N);
  for (std::size_t n = 0; n < N; ++n) {
    out[n] = static_cast<double>(inside[n]) / static_cast<double>(grid_size);
  }
  return out;
}

std::vector<double> bad_set_measure_averaged(const RandomSystem& sys, double rho, std::size_t N,
                                             std::size_t grid_size, std::size_t w_samples,
                                             unsigned jobs) {
  if (w_samples == 0) throw PreconditionError("bad_set_measure_averaged: w_samples must be >= 1");
  std::vector<std::vector<double>> per(w_samples);
  parallel_for(w_samples, jobs, [&](std::size_t i) {
    per[i] = bad_set_measure(sys, sys.base().sample_point(static_cast<std::uint64_t>(Stream::bad_set), i),
                             rho, N, grid_size);
  });
  std::vector<double> out(N, 0.0);
  for (const auto& series : per) {
    for (std::size_t n = 0; n < N; ++n) out[n] += series[n];
  }
  for (double& v : out) v /= static_cast<double>(w_samples);
  return out;
}

double log_slope(const std::vector<double>& values) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    const double x = static_cast<double>(i + 1);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1.0;
  }
  if (count < 2.0) return NAN;
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace rdspec
