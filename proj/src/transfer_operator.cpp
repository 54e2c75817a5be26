#include "rdspec/transfer_operator.hpp"

#include <algorithm>
#include <cmath>

#include "rdspec/errors.hpp"

namespace rdspec {

namespace {

constexpr std::size_t kMinResolution = 16;

void require_resolution(std::size_t G, const char* where) {
  if (G < kMinResolution) {
    throw PreconditionError(std::string(where) + ": resolution must be at least 16");
  }
}

// Cells a, b = a + 1 (periodic) and weight t of b for linear interpolation at y.
struct Stencil {
  std::size_t a = 0;
  std::size_t b = 0;
  double t = 0.0;
};

Stencil stencil(std::size_t G, double y) {
  const double u = wrap(y) * static_cast<double>(G) - 0.5;
  const double base = std::floor(u);
  const double t = u - base;
  const long long i = static_cast<long long>(base);
  const long long g = static_cast<long long>(G);
  const std::size_t a = static_cast<std::size_t>(((i % g) + g) % g);
  return {a, (a + 1) % G, t};
}

// Closed arc as at most two [lo, hi] pieces of [0,1].
std::vector<std::pair<double, double>> unroll(const Arc& arc) {
  if (arc.is_whole()) return {{0.0, 1.0}};
  const double lo = wrap(arc.start);
  const double hi = lo + arc.length;
  if (hi <= 1.0) return {{lo, hi}};
  return {{lo, 1.0}, {0.0, hi - 1.0}};
}

}  // namespace

GridFunction GridFunction::constant(std::size_t G, double v) {
  require_resolution(G, "GridFunction");
  return {G, std::vector<double>(G, v)};
}

GridFunction GridFunction::sample(std::size_t G, const std::function<double(double)>& psi) {
  require_resolution(G, "GridFunction");
  GridFunction out{G, std::vector<double>(G)};
  for (std::size_t i = 0; i < G; ++i) out.values[i] = psi((i + 0.5) / static_cast<double>(G));
  return out;
}

double GridFunction::at(double x) const {
  const Stencil s = stencil(resolution, x);
  return values[s.a] + s.t * (values[s.b] - values[s.a]);
}

GridMeasure GridMeasure::lebesgue(std::size_t G) {
  require_resolution(G, "GridMeasure");
  return {G, std::vector<double>(G, 1.0 / static_cast<double>(G))};
}

double GridMeasure::total_mass() const {
  long double s = 0.0L;
  for (double m : masses) s += m;
  return static_cast<double>(s);
}

double GridMeasure::arc_integral(const Arc& a, const std::function<double(double)>& weight) const {
  const double G = static_cast<double>(resolution);
  long double total = 0.0L;
  for (auto [lo, hi] : unroll(a)) {
    if (!(hi > lo)) continue;
    const std::size_t first = static_cast<std::size_t>(std::floor(lo * G));
    const std::size_t last = std::min(resolution - 1, static_cast<std::size_t>(std::floor(hi * G)));
    for (std::size_t i = first; i <= last && i < resolution; ++i) {
      const double cell_lo = static_cast<double>(i) / G;
      const double cell_hi = static_cast<double>(i + 1) / G;
      const double overlap = std::min(hi, cell_hi) - std::max(lo, cell_lo);
      if (overlap <= 0.0) continue;
      const double w = weight ? weight((i + 0.5) / G) : 1.0;
      total += static_cast<long double>(masses[i]) * overlap * G * w;
    }
  }
  return static_cast<double>(total);
}

double GridMeasure::arc_measure(const Arc& a) const { return arc_integral(a, {}); }

GridMeasure GridMeasure::normalized() const {
  const double m = total_mass();
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericalError("GridMeasure: mass underflow");
  GridMeasure out(*this);
  for (double& v : out.masses) v /= m;
  return out;
}

double pairing(const GridFunction& psi, const GridMeasure& rho) {
  if (psi.resolution != rho.resolution) throw PreconditionError("pairing: resolution mismatch");
  long double s = 0.0L;
  for (std::size_t i = 0; i < psi.resolution; ++i) s += psi.values[i] * rho.masses[i];
  return static_cast<double>(s);
}

double Potential::value(Symbol s, double y) const {
  if (is_zero()) return 0.0;
  return per_symbol.at(static_cast<std::size_t>(s)).at(y);
}

double Potential::weight(Symbol s, double y) const {
  if (is_zero()) return 1.0;
  return std::exp(value(s, y));
}

GridFunction apply_operator(const FiberMap& f, const Potential& phi, Symbol s,
                            const GridFunction& psi) {
  const std::size_t G = psi.resolution;
  if (!phi.is_zero() && phi.per_symbol.at(static_cast<std::size_t>(s)).resolution != G) {
    throw PreconditionError("apply_operator: resolution mismatch");
  }
  GridFunction out{G, std::vector<double>(G, 0.0)};
  for (std::size_t i = 0; i < G; ++i) {
    double sum = 0.0;
    for (const Preimage& y : f.preimages((i + 0.5) / static_cast<double>(G))) {
      sum += phi.weight(s, y.x) * psi.at(y.x);
    }
    out.values[i] = sum;
  }
  return out;
}

GridFunction apply_operator(const FiberMap& f, const GridFunction& psi) {
  return apply_operator(f, Potential{}, 0, psi);
}

GridMeasure dual_apply(const FiberMap& f, const Potential& phi, Symbol s, const GridMeasure& rho) {
  const std::size_t G = rho.resolution;
  if (!phi.is_zero() && phi.per_symbol.at(static_cast<std::size_t>(s)).resolution != G) {
    throw PreconditionError("dual_apply: resolution mismatch");
  }
  GridMeasure out{G, std::vector<double>(G, 0.0)};
  for (std::size_t i = 0; i < G; ++i) {
    const double m = rho.masses[i];
    if (m == 0.0) continue;
    for (const Preimage& y : f.preimages((i + 0.5) / static_cast<double>(G))) {
      const double w = m * phi.weight(s, y.x);
      const Stencil st = stencil(G, y.x);
      out.masses[st.a] += w * (1.0 - st.t);
      out.masses[st.b] += w * st.t;
    }
  }
  return out;
}

GridMeasure dual_apply(const FiberMap& f, const GridMeasure& rho) {
  return dual_apply(f, Potential{}, 0, rho);
}

double lambda_of(const FiberMap& f, const Potential& phi, Symbol s, const GridMeasure& mu_next) {
  const GridFunction one = GridFunction::constant(mu_next.resolution, 1.0);
  return pairing(apply_operator(f, phi, s, one), mu_next);
}

double lambda_of(const FiberMap& f, const GridMeasure& mu_next) {
  return lambda_of(f, Potential{}, 0, mu_next);
}

namespace {

void fill_errors(JacobianCheck& out, double total_mass) {
  const double gap = std::fabs(out.lhs - out.rhs);
  const double scale = std::max(std::fabs(out.lhs), std::fabs(out.rhs));
  out.relative_error = total_mass > 0.0 ? gap / total_mass : gap;
  out.arc_relative_error = scale == 0.0 ? 0.0 : gap / scale;
}

// Image arc of A under the composition along `word`, requiring injectivity.
Arc image_arc(const RandomSystem& sys, std::span<const Symbol> word, const Arc& A) {
  Precise start(A.start, 128);
  Precise length(A.length, 128);
  for (Symbol s : word) {
    const FiberMap& f = sys.fiber(s);
    length = f.image_length(start, length);
    start = f.apply(start);
    if (length >= 1.0) {
      throw PreconditionError("jacobian_check: f^n is not injective on A");
    }
  }
  return {start.get_d(), length.get_d()};
}

void require_single_branch(const FiberMap& f, const Arc& A) {
  if (A.is_whole()) throw PreconditionError("jacobian_check: A straddles a branch breakpoint");
  const double lo = wrap(A.start);
  const double hi = lo + A.length;
  if (A.length == 0.0) return;
  const int branch = f.branch_of(lo);
  const double end = f.breakpoints()[static_cast<std::size_t>(branch) + 1];
  if (hi > end + 1e-15) {
    throw PreconditionError("jacobian_check: A straddles a branch breakpoint");
  }
}

}  // namespace

JacobianCheck jacobian_check(const FiberMap& f, const Potential& phi, Symbol s,
                             const GridMeasure& mu, const GridMeasure& mu_next, const Arc& A) {
  if (mu.resolution != mu_next.resolution) {
    throw PreconditionError("jacobian_check: resolution mismatch");
  }
  require_single_branch(f, A);
  JacobianCheck out;
  if (A.length == 0.0) return out;
  const RandomSystem single = RandomSystem::single(f, 1.0, 1.0, 0.5);
  const Arc image = image_arc(single, std::vector<Symbol>{0}, A);
  out.lhs = mu_next.arc_measure(image);
  const double lambda = lambda_of(f, phi, s, mu_next);
  out.rhs = lambda * mu.arc_integral(A, [&](double x) { return 1.0 / phi.weight(s, x); });
  fill_errors(out, mu_next.total_mass());
  return out;
}

JacobianCheck jacobian_check(const FiberMap& f, const GridMeasure& mu, const GridMeasure& mu_next,
                             const Arc& A) {
  return jacobian_check(f, Potential{}, 0, mu, mu_next, A);
}

JacobianCheck jacobian_check_word(const RandomSystem& sys, std::span<const Symbol> word,
                                  const std::vector<GridMeasure>& measures,
                                  const std::vector<double>& lambdas, const Arc& A) {
  const std::size_t n = word.size();
  if (measures.size() < n + 1 || lambdas.size() < n) {
    throw PreconditionError("jacobian_check_word: need n + 1 measures and n lambdas");
  }
  if (n > 0) require_single_branch(sys.fiber(word[0]), A);
  JacobianCheck out;
  if (A.length == 0.0) return out;
  const Arc image = image_arc(sys, word, A);
  out.lhs = measures[n].arc_measure(image);
  double lambda_n = 1.0;
  for (std::size_t j = 0; j < n; ++j) lambda_n *= lambdas[j];
  out.rhs = lambda_n * measures[0].arc_measure(A);
  fill_errors(out, measures[n].total_mass());
  return out;
}

ReferenceSequence reference_measure_sequence(const RandomSystem& sys, std::span<const Symbol> word,
                                             std::size_t G, const Potential& phi) {
  if (word.empty()) throw PreconditionError("reference_measure_sequence: T must be >= 1");
  const std::size_t T = word.size();
  ReferenceSequence out;
  out.measures.assign(T + 1, GridMeasure{});
  out.lambdas.assign(T, 0.0);
  out.measures[T] = GridMeasure::lebesgue(G);
  for (std::size_t j = T; j-- > 0;) {
    GridMeasure pushed = dual_apply(sys.fiber(word[j]), phi, word[j], out.measures[j + 1]);
    const double mass = pushed.total_mass();
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw NumericalError("reference_measure_sequence: mass underflow at step " +
                           std::to_string(j));
    }
    out.lambdas[j] = mass;
    for (double& v : pushed.masses) v /= mass;
    out.measures[j] = std::move(pushed);
  }
  return out;
}

}  // namespace rdspec
