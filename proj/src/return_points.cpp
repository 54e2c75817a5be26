#include "rdspec/return_points.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rdspec/exactness.hpp"
#include "rdspec/hyperbolic_times.hpp"
#include "rdspec/parallel.hpp"
#include "rdspec/sampling.hpp"

namespace rdspec {

namespace {

struct Extents {
  std::vector<Precise> left;
  std::vector<Precise> right;
};

// Pulls the arc [x_depth - r, x_depth + r] back along the orbit's own
// inverse branches; with `clip`, each level is intersected with B(x_k, clip).
Extents pull_back(const RandomSystem& sys, const PreciseOrbit& orbit, std::size_t depth,
                  const Precise& radius, std::optional<double> clip) {
  Extents e;
  e.left.assign(depth + 1, radius);
  e.right.assign(depth + 1, radius);
  for (std::size_t k = depth; k-- > 0;) {
    const FiberMap& f = sys.fiber(orbit.symbols[k]);
    e.left[k] = f.walk_backward(orbit.points[k], e.left[k + 1]);
    e.right[k] = f.walk_forward(orbit.points[k], e.right[k + 1]);
    if (clip) {
      if (e.left[k] > *clip) e.left[k] = *clip;
      if (e.right[k] > *clip) e.right[k] = *clip;
    }
  }
  return e;
}

// max_k log(extent_{n_h - k}) - log(delta) + c k / 2 over both sides.
double certificate(const Extents& e, std::size_t depth, double delta, double c) {
  double worst = -INFINITY;
  const double log_delta = std::log(delta);
  for (std::size_t k = 1; k <= depth; ++k) {
    const double allowance = -0.5 * c * static_cast<double>(k);
    worst = std::max(worst, log_abs(e.left[depth - k]) - log_delta - allowance);
    worst = std::max(worst, log_abs(e.right[depth - k]) - log_delta - allowance);
  }
  return worst;
}

constexpr double kCertificateSlack = 1e-9;

std::vector<double> logs_of(const RandomSystem& sys, const PreciseOrbit& orbit) {
  std::vector<double> logs;
  logs.reserve(orbit.pieces.size());
  for (std::size_t j = 0; j < orbit.pieces.size(); ++j) {
    logs.push_back(sys.fiber(orbit.symbols[j]).log_inverse_lipschitz_of_piece(orbit.pieces[j]));
  }
  return logs;
}

}  // namespace

DynamicalBall dynamical_ball(const RandomSystem& sys, const BasePoint& w, const Precise& x,
                             std::size_t n, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw PreconditionError("dynamical_ball: eps must lie in (0, 1/2)");
  const std::vector<Symbol> word = sys.word(w, n);
  const PreciseOrbit orbit = iterate_precise(sys, word, x, required_precision(sys, word));
  const Extents e = pull_back(sys, orbit, n, Precise(eps, orbit.precision), eps);
  DynamicalBall ball;
  ball.center = wrap(x.get_d());
  ball.depth = n;
  ball.radius = eps;
  ball.left = e.left[0];
  ball.right = e.right[0];
  return ball;
}

DynamicalBall dynamical_ball(const RandomSystem& sys, const BasePoint& w, double x, std::size_t n,
                             double eps) {
  return dynamical_ball(sys, w, Precise(x, 64), n, eps);
}

PreBall hyperbolic_preball(const RandomSystem& sys, const BasePoint& w, const Precise& z,
                           std::size_t n_h, double delta) {
  const std::vector<Symbol> word = sys.word(w, n_h);
  const PreciseOrbit orbit = iterate_precise(sys, word, z, required_precision(sys, word));
  if (n_h > 0) {
    const HyperbolicTimeRecord record = hyperbolic_times(logs_of(sys, orbit), sys.c());
    if (record.times.empty() || record.times.back() != n_h) {
      throw PreconditionError("hyperbolic_preball: n_h = " + std::to_string(n_h) +
                              " is not a c-hyperbolic time of (w, z)");
    }
  }
  const Extents e = pull_back(sys, orbit, n_h, Precise(delta, orbit.precision), std::nullopt);
  PreBall ball;
  ball.depth = n_h;
  ball.delta = delta;
  ball.left = e.left;
  ball.right = e.right;
  ball.worst_certificate = certificate(e, n_h, delta, sys.c());
  if (ball.worst_certificate > kCertificateSlack) {
    throw NumericalError("hyperbolic_preball: contraction certificate fails (delta too large)");
  }
  return ball;
}

ReturnPointResult find_return_point(const RandomSystem& sys, const BasePoint& w, const Precise& x,
                                    std::size_t n, double eps,
                                    const ReturnPointOptions& options) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw PreconditionError("find_return_point: eps must lie in (0, 1/2)");
  }
  const std::size_t search = n + std::max(options.min_search, n / 2);
  const std::vector<Symbol> word = sys.word(w, search + options.exactness_cap);
  const Bits bits = required_precision(sys, word, options.guard);
  const PreciseOrbit orbit =
      iterate_precise(sys, std::span<const Symbol>(word).first(search), x, bits);
  const std::vector<Precise>& xs = orbit.points;

  // (1) smallest hyperbolic time n_h >= n.
  std::size_t n_h = 0;
  if (n > 0) {
    const HyperbolicTimeRecord record = hyperbolic_times(logs_of(sys, orbit), sys.c());
    auto it = std::lower_bound(record.times.begin(), record.times.end(), n);
    if (it == record.times.end()) {
      throw ReturnPointError(ReturnFailure::search_horizon,
                             "no hyperbolic time in [" + std::to_string(n) + ", " +
                                 std::to_string(search) + "]");
    }
    n_h = *it;
  }

  // (2) pre-ball radius gamma: every level within eps/2 and certified contracting.
  ReturnPointTrace trace;
  trace.hyperbolic_time = n_h;
  double gamma = 0.5 * eps;
  Extents levels;
  bool certified = false;
  for (; trace.halvings <= options.max_halvings; ++trace.halvings, gamma *= 0.5) {
    levels = pull_back(sys, orbit, n_h, Precise(gamma, bits), std::nullopt);
    bool inside = true;
    for (std::size_t k = 0; k <= n_h && inside; ++k) {
      inside = levels.left[k] <= 0.5 * eps && levels.right[k] <= 0.5 * eps;
    }
    if (inside && certificate(levels, n_h, gamma, sys.c()) <= kCertificateSlack) {
      certified = true;
      break;
    }
  }
  if (!certified) {
    throw ReturnPointError(ReturnFailure::certificate,
                           "pre-ball contraction certificate fails for every radius tried");
  }
  trace.gamma = gamma;

  // (3) covering: the image of B(x_{n_h}, gamma) after j steps contains V.
  Precise v_lo(xs[0]);
  v_lo -= levels.left[0];
  Precise v_hi(xs[0]);
  v_hi += levels.right[0];
  std::vector<Precise> starts;
  Precise start(xs[n_h]);
  start -= gamma;
  start = wrap(start);
  Precise length(2.0 * gamma, bits);
  Precise lap(0, bits);
  std::optional<std::size_t> covering;
  for (std::size_t j = 0; j <= options.exactness_cap; ++j) {
    starts.push_back(start);
    lap = start;
    lap -= v_lo;
    lap = ceil_of(lap);
    Precise top(v_hi);
    top += lap;
    Precise end(start);
    end += length;
    if (top <= end) {
      covering = j;
      break;
    }
    if (j == options.exactness_cap) break;
    length = push_arc(sys.fiber(word[n_h + j]), start, length);
  }
  if (!covering) {
    throw ReturnPointError(ReturnFailure::exactness,
                           "covering not achieved within exactness cap " +
                               std::to_string(options.exactness_cap));
  }
  const std::size_t j = *covering;
  trace.covering_steps = j;

  // (4) Banach iteration of the composed inverse branch V -> V.
  const Precise gamma_p(gamma, bits);
  auto inverse_branch = [&](const Precise& y) {
    Precise tau(y);
    tau += lap;
    tau -= starts[j];
    for (std::size_t i = j; i-- > 0;) {
      tau = sys.fiber(word[n_h + i]).walk_forward(starts[i], tau);
    }
    Precise delta(tau);
    delta -= gamma_p;
    for (std::size_t k = n_h; k-- > 0;) {
      const FiberMap& f = sys.fiber(word[k]);
      if (is_negative(delta)) {
        Precise back(delta);
        back = -back;
        delta = f.walk_backward(xs[k], back);
        delta = -delta;
      } else {
        delta = f.walk_forward(xs[k], delta);
      }
    }
    Precise out(xs[0]);
    out += delta;
    return out;
  };
  const double stop = -static_cast<double>(bits - options.guard / 2) * std::log(2.0);
  Precise y(xs[0]);
  for (trace.contraction_iterations = 1;; ++trace.contraction_iterations) {
    Precise next = inverse_branch(y);
    Precise step(next);
    step -= y;
    y = next;
    if (log_abs(step) <= stop) break;
    if (trace.contraction_iterations >= options.max_iter) {
      throw ReturnPointError(ReturnFailure::contraction,
                             "contraction iteration did not converge in " +
                                 std::to_string(options.max_iter) + " iterations");
    }
  }

  ReturnPointResult result;
  result.p_precise = wrap(y);
  result.p = result.p_precise.get_d();
  result.n = n;
  result.eps = eps;
  result.period = n_h + j;
  result.K = n_h + j - n;
  result.trace = trace;

  // (5) forward residual and shadowing along the solver's own orbit of x.
  Precise z(result.p_precise);
  double shadow = 0.0;
  for (std::size_t i = 0; i < result.period; ++i) {
    if (i <= n) shadow = std::max(shadow, circle_distance(z, xs[i]).get_d());
    z = sys.fiber(word[i]).apply(z);
  }
  if (result.period <= n) shadow = std::max(shadow, circle_distance(z, xs[result.period]).get_d());
  result.shadow_error = shadow;
  result.fixpoint_residual = circle_distance(z, result.p_precise).get_d();
  if (!(result.fixpoint_residual <= options.fixpoint_tol) || !(shadow < eps)) {
    throw ReturnPointError(ReturnFailure::contraction,
                           "fixed point fails its residual or shadowing check (residual " +
                               std::to_string(result.fixpoint_residual) + ")");
  }
  return result;
}

ReturnPointResult find_return_point(const RandomSystem& sys, const BasePoint& w, double x,
                                    std::size_t n, double eps,
                                    const ReturnPointOptions& options) {
  return find_return_point(sys, w, Precise(x, 64), n, eps, options);
}

ReturnPointCheck verify_return_point(const RandomSystem& sys, const BasePoint& w,
                                     const Precise& x, const ReturnPointResult& result,
                                     double fixpoint_tol) {
  const std::size_t m = result.period;
  const std::vector<Symbol> word = sys.word(w, std::max(m, result.n));
  const Bits bits = required_precision(sys, word, 192);
  const PreciseOrbit from_p = iterate_precise(sys, word, result.p_precise, bits);
  const PreciseOrbit from_x = iterate_precise(sys, word, x, bits);
  ReturnPointCheck check;
  for (std::size_t i = 0; i <= result.n; ++i) {
    check.shadow_error =
        std::max(check.shadow_error, circle_distance(from_p.points[i], from_x.points[i]).get_d());
  }
  check.fixpoint_residual = circle_distance(from_p.points[m], from_p.points[0]).get_d();
  check.ok = check.shadow_error < result.eps && check.fixpoint_residual <= fixpoint_tol;
  return check;
}

std::vector<SpecificationRow> specification_statistics(const RandomSystem& sys,
                                                       std::size_t sample_size,
                                                       const std::vector<std::size_t>& n_schedule,
                                                       double eps, unsigned jobs,
                                                       const ReturnPointOptions& options) {
  for (std::size_t i = 1; i < n_schedule.size(); ++i) {
    if (!(n_schedule[i] > n_schedule[i - 1])) {
      throw PreconditionError("specification_statistics: n_schedule must be increasing");
    }
  }
  std::vector<SpecificationRow> rows;
  if (sample_size == 0) return rows;
  for (std::size_t s = 0; s < n_schedule.size(); ++s) {
    const std::size_t n = n_schedule[s];
    const std::size_t horizon = query_horizon(n, options);
    std::vector<double> ratio(sample_size, -1.0);
    parallel_for(sample_size, jobs, [&](std::size_t i) {
      const Draw d = draw_sample(sys, Stream::spec_stats, i, horizon, s);
      try {
        const ReturnPointResult r = find_return_point(sys, d.w, d.x, n, eps, options);
        ratio[i] = static_cast<double>(r.K) / static_cast<double>(n);
      } catch (const NumericalError&) {
      }
    });
    std::vector<double> ok;
    for (double v : ratio) {
      if (v >= 0.0) ok.push_back(v);
    }
    std::sort(ok.begin(), ok.end());
    SpecificationRow row;
    row.n = n;
    row.eps = eps;
    row.samples = sample_size;
    row.failure_rate =
        static_cast<double>(sample_size - ok.size()) / static_cast<double>(sample_size);
    if (ok.empty()) {
      row.median_K_over_n = NAN;
      row.p90_K_over_n = NAN;
    } else {
      const std::size_t h = ok.size() / 2;
      row.median_K_over_n = ok.size() % 2 == 1 ? ok[h] : 0.5 * (ok[h - 1] + ok[h]);
      const std::size_t rank =
          static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(ok.size())));
      row.p90_K_over_n = ok[std::max<std::size_t>(rank, 1) - 1];
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rdspec
