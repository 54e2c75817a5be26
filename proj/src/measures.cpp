#include "rdspec/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rdspec/errors.hpp"
#include "rdspec/parallel.hpp"
#include "rdspec/sampling.hpp"

namespace rdspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMassTolerance = 1e-12;
constexpr double kGridMassTolerance = 1e-9;

std::size_t cell_of(double x, std::size_t G) {
  const double u = wrap(x) * static_cast<double>(G);
  return std::min(static_cast<std::size_t>(u), G - 1);
}

double cell_center(std::size_t i, std::size_t G) {
  return (static_cast<double>(i) + 0.5) / static_cast<double>(G);
}

// W1 without normalization checks. D is the CDF difference on the segments
// between consecutive atom positions; the optimal rotation shift is a
// Lebesgue-weighted median of D.
double w1_core(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  std::vector<std::pair<double, double>> events;  // (position, signed mass)
  events.reserve(a.size() + b.size());
  for (const Atom& x : a) events.emplace_back(x.position, x.weight);
  for (const Atom& x : b) events.emplace_back(x.position, -x.weight);
  std::sort(events.begin(), events.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });

  std::vector<std::pair<double, double>> segments;  // (D, length)
  segments.reserve(events.size() + 1);
  double cursor = 0.0;
  long double D = 0.0L;
  for (const auto& [x, m] : events) {
    if (x > cursor) segments.emplace_back(static_cast<double>(D), x - cursor);
    cursor = std::max(cursor, x);
    D += m;
  }
  if (cursor < 1.0) segments.emplace_back(static_cast<double>(D), 1.0 - cursor);

  std::vector<std::pair<double, double>> sorted(segments);
  std::sort(sorted.begin(), sorted.end());
  long double total = 0.0L;
  for (const auto& s : sorted) total += s.second;
  long double acc = 0.0L;
  double median = sorted.empty() ? 0.0 : sorted.back().first;
  for (const auto& [d, len] : sorted) {
    acc += len;
    if (2.0L * acc >= total) {
      median = d;
      break;
    }
  }
  long double cost = 0.0L;
  for (const auto& [d, len] : segments) cost += static_cast<long double>(len) * std::fabs(d - median);
  return static_cast<double>(cost);
}

void require_normalized(const AtomicMeasure& mu, const char* which) {
  if (!mu.is_normalized()) {
    std::ostringstream msg;
    msg << "wasserstein1: " << which << " is not normalized (total mass "
        << mu.total_mass() << ")";
    throw PreconditionError(msg.str());
  }
}

GridMeasure normalized_grid(const GridMeasure& mu, const char* where) {
  const double m = mu.total_mass();
  if (std::fabs(m - 1.0) > kGridMassTolerance) {
    std::ostringstream msg;
    msg << where << ": grid measure is not normalized (total mass " << m << ")";
    throw PreconditionError(msg.str());
  }
  return mu.normalized();
}

// f^j_w(p) for j <= m, after checking that the orbit closes.
std::vector<double> closed_orbit(const RandomSystem& sys, const BasePoint& w,
                                 const ReturnPointResult& result, double tol) {
  const std::size_t m = result.period;
  if (m == 0) throw PreconditionError("return orbit: period must be positive");
  const std::vector<Symbol> word = sys.word(w, m);
  const Bits bits = std::max<Bits>(required_precision(sys, word), result.p_precise.get_prec());
  const PreciseOrbit orbit = iterate_precise(sys, word, result.p_precise, bits);
  const double residual = to_double(circle_distance(orbit.points[m], orbit.points[0]));
  if (!(residual <= tol)) {
    std::ostringstream msg;
    msg << "return orbit: unverified return point (f^" << m << "(p) misses p by " << residual
        << ", tolerance " << tol << ")";
    throw PreconditionError(msg.str());
  }
  std::vector<double> points;
  points.reserve(m + 1);
  for (const Precise& p : orbit.points) points.push_back(wrap(p.get_d()));
  return points;
}

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  for (Atom& a : atoms) {
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
      throw PreconditionError("AtomicMeasure: atom weights must be positive and finite");
    }
    if (!std::isfinite(a.position)) throw PreconditionError("AtomicMeasure: non-finite position");
    a.position = wrap(a.position);
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& l, const Atom& r) { return l.position < r.position; });
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && a.position - atoms_.back().position <= kPointTolerance) {
      atoms_.back().weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
  // Atoms just below 1 coincide with atoms at 0 on the circle.
  if (atoms_.size() > 1 && atoms_.front().position + 1.0 - atoms_.back().position <= kPointTolerance) {
    atoms_.front().weight += atoms_.back().weight;
    atoms_.pop_back();
  }
}

AtomicMeasure AtomicMeasure::from_grid(const GridMeasure& mu) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < mu.resolution; ++i) {
    if (mu.masses[i] > 0.0) atoms.push_back({cell_center(i, mu.resolution), mu.masses[i]});
  }
  return AtomicMeasure(std::move(atoms));
}

double AtomicMeasure::total_mass() const {
  long double s = 0.0L;
  for (const Atom& a : atoms_) s += a.weight;
  return static_cast<double>(s);
}

bool AtomicMeasure::is_normalized() const {
  return std::fabs(total_mass() - 1.0) <= kMassTolerance;
}

AtomicMeasure AtomicMeasure::normalized() const {
  const double m = total_mass();
  if (!(m > 0.0)) throw PreconditionError("AtomicMeasure: cannot normalize an empty measure");
  AtomicMeasure out(*this);
  for (Atom& a : out.atoms_) a.weight /= m;
  return out;
}

GridMeasure AtomicMeasure::discretize(std::size_t G) const {
  if (G == 0) throw PreconditionError("discretize: resolution must be positive");
  GridMeasure out{G, std::vector<double>(G, 0.0)};
  for (const Atom& a : atoms_) out.masses[cell_of(a.position, G)] += a.weight;
  return out;
}

double wasserstein1(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  require_normalized(mu, "first measure");
  require_normalized(nu, "second measure");
  return w1_core(mu.atoms(), nu.atoms());
}

GridDistance wasserstein1(const GridMeasure& mu, const AtomicMeasure& nu) {
  require_normalized(nu, "atomic measure");
  const GridMeasure grid = normalized_grid(mu, "wasserstein1");
  const GridMeasure atoms = nu.discretize(grid.resolution);
  GridDistance out;
  out.value = w1_core(AtomicMeasure::from_grid(grid).atoms(), AtomicMeasure::from_grid(atoms).atoms());
  out.discretization_bound = 0.5 / static_cast<double>(grid.resolution);
  return out;
}

Observable Observable::constant(double c) {
  Observable o;
  o.kind_ = Kind::constant;
  o.value_ = c;
  return o;
}

Observable Observable::cosine(int mode) {
  if (mode < 0) throw PreconditionError("Observable: mode must be nonnegative");
  Observable o;
  o.kind_ = Kind::cosine;
  o.mode_ = mode;
  return o;
}

Observable Observable::sine(int mode) {
  if (mode < 0) throw PreconditionError("Observable: mode must be nonnegative");
  Observable o;
  o.kind_ = Kind::sine;
  o.mode_ = mode;
  return o;
}

Observable Observable::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw PreconditionError("Observable: piecewise-linear table is empty");
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const auto [x, y] = knots[k];
    if (!(x >= 0.0 && x < 1.0) || !std::isfinite(y)) {
      throw PreconditionError("Observable: knots must lie in [0,1) with finite values");
    }
    if (k > 0 && !(x > knots[k - 1].first)) {
      throw PreconditionError("Observable: knots must be strictly increasing");
    }
  }
  Observable o;
  o.kind_ = Kind::piecewise_linear;
  o.knots_ = std::move(knots);
  return o;
}

double Observable::operator()(double x) const {
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::cosine:
      return std::cos(kTwoPi * mode_ * x);
    case Kind::sine:
      return std::sin(kTwoPi * mode_ * x);
    case Kind::piecewise_linear:
      break;
  }
  x = wrap(x);
  const auto& k = knots_;
  if (k.size() == 1) return k[0].second;
  auto hi = std::upper_bound(k.begin(), k.end(), x,
                             [](double v, const auto& knot) { return v < knot.first; });
  // Between the last knot and the first one (through 1 = 0).
  if (hi == k.begin() || hi == k.end()) {
    const auto& a = k.back();
    const auto& b = k.front();
    const double span = b.first + 1.0 - a.first;
    const double off = wrap(x - a.first);
    return a.second + (b.second - a.second) * off / span;
  }
  const auto& b = *hi;
  const auto& a = *(hi - 1);
  return a.second + (b.second - a.second) * (x - a.first) / (b.first - a.first);
}

double Observable::lipschitz() const {
  switch (kind_) {
    case Kind::constant:
      return 0.0;
    case Kind::cosine:
    case Kind::sine:
      return kTwoPi * mode_;
    case Kind::piecewise_linear:
      break;
  }
  if (knots_.size() == 1) return 0.0;
  double L = 0.0;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& a = knots_[i];
    const auto& b = knots_[(i + 1) % knots_.size()];
    const double span = i + 1 == knots_.size() ? b.first + 1.0 - a.first : b.first - a.first;
    L = std::max(L, std::fabs(b.second - a.second) / span);
  }
  return L;
}

double Observable::sup_norm() const {
  switch (kind_) {
    case Kind::constant:
      return std::fabs(value_);
    case Kind::cosine:
      return 1.0;
    case Kind::sine:
      return mode_ == 0 ? 0.0 : 1.0;
    case Kind::piecewise_linear:
      break;
  }
  double s = 0.0;
  for (const auto& k : knots_) s = std::max(s, std::fabs(k.second));
  return s;
}

std::string Observable::label() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::constant:
      out << "const(" << value_ << ")";
      break;
    case Kind::cosine:
      out << "cos(2pi*" << mode_ << "x)";
      break;
    case Kind::sine:
      out << "sin(2pi*" << mode_ << "x)";
      break;
    case Kind::piecewise_linear:
      out << "pl(" << knots_.size() << " knots)";
      break;
  }
  return out.str();
}

double birkhoff_average(const Orbit& orbit, const Observable& obs, std::size_t n) {
  if (n == 0 || n > orbit.points.size()) {
    throw PreconditionError("birkhoff_average: need 0 < n <= number of orbit points");
  }
  long double s = 0.0L;
  for (std::size_t j = 0; j < n; ++j) s += obs(orbit.points[j]);
  return static_cast<double>(s / static_cast<long double>(n));
}

AtomicMeasure return_orbit_measure(const RandomSystem& sys, const ReturnPointResult& result,
                                   const BasePoint& w, double tol) {
  const std::vector<double> points = closed_orbit(sys, w, result, tol);
  const std::size_t m = result.period;
  std::vector<Atom> atoms;
  atoms.reserve(m);
  for (std::size_t j = 0; j < m; ++j) atoms.push_back({points[j], 1.0 / static_cast<double>(m)});
  return AtomicMeasure(std::move(atoms));
}

SumComparison sum_comparison(const RandomSystem& sys, const BasePoint& w,
                             const ReturnPointResult& result, const Observable& obs) {
  const std::size_t m = result.period;
  const std::size_t n = result.n;
  if (n == 0 || m < n) throw PreconditionError("sum_comparison: need 0 < n <= period");
  const std::vector<double> points = closed_orbit(sys, w, result, kInvariantTolerance);
  long double head = 0.0L;
  long double full = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == n) head = full;
    full += obs(points[j]);
  }
  if (m == n) head = full;
  SumComparison out;
  out.difference = static_cast<double>(
      std::fabs(full / static_cast<long double>(m) - head / static_cast<long double>(n)));
  out.bound = 2.0 * static_cast<double>(m - n) * obs.sup_norm() / static_cast<double>(n);
  if (!(out.difference <= out.bound)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "sum_comparison: difference " << out.difference << " exceeds 2K|obs|/n = " << out.bound
        << " (n = " << n << ", K = " << m - n << ")";
    throw AssertionFailure(msg.str());
  }
  return out;
}

DisintegrationApprox atomic_disintegration_approx(const RandomSystem& sys, const GridMeasure& mu,
                                                  const BasePoint& w, std::size_t r, double eps,
                                                  const ReturnPointOptions& options) {
  if (r < 2) throw PreconditionError("atomic_disintegration_approx: r must be at least 2");
  const double mesh = 1.0 / static_cast<double>(r);
  if (eps == 0.0) eps = 0.5 * mesh;
  if (!(eps > 0.0 && eps <= 0.5 * mesh * (1.0 + 1e-12))) {
    throw PreconditionError("atomic_disintegration_approx: eps must lie in (0, 1/(2r)]");
  }
  const GridMeasure grid = normalized_grid(mu, "atomic_disintegration_approx");

  DisintegrationApprox out;
  out.r = r;
  out.mesh_bound = 0.5 * mesh;
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < r; ++i) {
    const double lo = static_cast<double>(i) * mesh;
    const double center = (static_cast<double>(i) + 0.5) * mesh;
    ReturnPointResult found;
    try {
      found = find_return_point(sys, w, center, 1, eps, options);
    } catch (const ReturnPointError& e) {
      std::ostringstream msg;
      msg << "arc " << i << " [" << lo << ", " << lo + mesh << "): " << e.what();
      throw ReturnPointError(e.kind(), msg.str());
    }
    out.return_points.push_back(found.p);
    out.placement_error = std::max(out.placement_error, circle_distance(found.p, center));
    const double weight = grid.arc_measure(Arc{lo, mesh});
    if (weight > 0.0) atoms.push_back({found.p, weight});
  }
  out.nu = AtomicMeasure(std::move(atoms)).normalized();
  const GridDistance d = wasserstein1(grid, out.nu);
  out.w1 = d.value;
  // Cells straddling an arc boundary add 1/(2G) on top of the atom discretization.
  out.discretization = 2.0 * d.discretization_bound;
  if (!(out.w1 <= out.bound() + 1e-12)) {
    std::ostringstream msg;
    msg << "atomic_disintegration_approx: W1 = " << out.w1 << " exceeds mesh bound " << out.bound()
        << " at r = " << r;
    throw AssertionFailure(msg.str());
  }
  return out;
}

GridDistance fiber_average_comparison(const std::vector<GridMeasure>& mu_sequence, std::size_t T,
                                      const AtomicMeasure& target) {
  if (T == 0 || T > mu_sequence.size()) {
    throw PreconditionError("fiber_average_comparison: need 0 < T <= sequence length");
  }
  const std::size_t G = mu_sequence.front().resolution;
  GridMeasure mix{G, std::vector<double>(G, 0.0)};
  for (std::size_t j = 0; j < T; ++j) {
    if (mu_sequence[j].resolution != G) {
      throw PreconditionError("fiber_average_comparison: resolution mismatch at measure " +
                              std::to_string(j));
    }
    for (std::size_t i = 0; i < G; ++i) mix.masses[i] += mu_sequence[j].masses[i];
  }
  for (double& v : mix.masses) v /= static_cast<double>(T);
  return wasserstein1(mix, target);
}

KrylovStart KrylovStart::from(const AtomicMeasure& nu) {
  KrylovStart out;
  for (const Atom& a : nu.atoms()) {
    out.positions.emplace_back(a.position);
    out.weights.push_back(a.weight);
  }
  return out;
}

KrylovStart KrylovStart::uniform(std::size_t G) {
  KrylovStart out;
  for (std::size_t j = 0; j < G; ++j) {
    mpq_class q(static_cast<unsigned long>(j), static_cast<unsigned long>(G));
    q.canonicalize();
    out.positions.push_back(q);
    out.weights.push_back(1.0 / static_cast<double>(G));
  }
  return out;
}

std::vector<KrylovRow> krylov_bogolioubov(const RandomSystem& sys, const KrylovStart& nu,
                                          const std::vector<std::size_t>& n_values,
                                          const KrylovOptions& options) {
  if (n_values.empty()) return {};
  for (std::size_t n : n_values) {
    if (n == 0) throw PreconditionError("krylov_bogolioubov: n must be at least 1");
  }
  if (nu.positions.empty() || nu.positions.size() != nu.weights.size()) {
    throw PreconditionError("krylov_bogolioubov: start measure needs matching positions and weights");
  }
  if (options.base_samples == 0 || options.max_mode < 1) {
    throw PreconditionError("krylov_bogolioubov: need base samples and at least one mode");
  }

  // Fiber observables: 1, then cos and sin for each mode.
  const std::size_t modes = static_cast<std::size_t>(options.max_mode);
  const std::size_t fiber_count = 1 + 2 * modes;
  auto fiber_values = [&](double x, std::vector<double>& acc, double weight) {
    acc[0] += weight;
    for (std::size_t m = 1; m <= modes; ++m) {
      acc[2 * m - 1] += weight * std::cos(kTwoPi * static_cast<double>(m) * x);
      acc[2 * m] += weight * std::sin(kTwoPi * static_cast<double>(m) * x);
    }
  };

  std::vector<std::size_t> times{0};
  times.insert(times.end(), n_values.begin(), n_values.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const std::size_t horizon = times.back();

  struct SampleRecord {
    std::vector<Symbol> symbol_at;             // w_t for each recorded time
    std::vector<std::vector<double>> values;   // sum_atoms weight g(x_t)
  };
  std::vector<SampleRecord> records(options.base_samples);
  parallel_for(options.base_samples, options.jobs, [&](std::size_t k) {
    const Draw draw = draw_sample(sys, Stream::krylov, k, horizon + 1);
    const std::span<const Symbol> steps(draw.word.data(), horizon);
    const Bits bits = required_precision(sys, steps);
    SampleRecord rec;
    rec.values.assign(times.size(), std::vector<double>(fiber_count, 0.0));
    for (std::size_t t : times) rec.symbol_at.push_back(draw.word[t]);
    for (std::size_t a = 0; a < nu.positions.size(); ++a) {
      Precise x(0, bits);
      x = nu.positions[a];
      x = wrap(x);
      std::size_t next = 0;
      for (std::size_t t = 0; t <= horizon; ++t) {
        if (times[next] == t) {
          fiber_values(x.get_d(), rec.values[next], nu.weights[a]);
          ++next;
        }
        if (t < horizon) x = sys.fiber(draw.word[t]).apply(x);
      }
    }
    records[k] = std::move(rec);
  });

  const int alphabet = sys.base().alphabet_size();
  auto expectation = [&](std::size_t time_index, int cylinder, std::size_t g) {
    long double s = 0.0L;
    for (const SampleRecord& rec : records) {
      if (cylinder >= 0 && rec.symbol_at[time_index] != cylinder) continue;
      s += rec.values[time_index][g];
    }
    return s / static_cast<long double>(records.size());
  };
  auto fiber_label = [&](std::size_t g) -> std::string {
    if (g == 0) return "1";
    const std::size_t m = (g + 1) / 2;
    return (g % 2 == 1 ? "cos(2pi*" : "sin(2pi*") + std::to_string(m) + "x)";
  };

  std::vector<KrylovRow> rows;
  for (std::size_t n : n_values) {
    const std::size_t ti = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), n) - times.begin());
    KrylovRow row;
    row.n = n;
    row.bound = 2.0 / static_cast<double>(n);
    row.worst = "none";
    for (int cyl = -1; cyl < alphabet; ++cyl) {
      for (std::size_t g = 0; g < fiber_count; ++g) {
        // Telescoped: int phi o F - phi d tau_n = (E phi o F^n - E phi) / n.
        const long double diff = expectation(ti, cyl, g) - expectation(0, cyl, g);
        const double defect = static_cast<double>(std::fabs(diff) / static_cast<long double>(n));
        if (defect > row.defect) {
          row.defect = defect;
          row.worst = (cyl < 0 ? std::string("X") : "[w0=" + std::to_string(cyl) + "]") + " x " +
                      fiber_label(g);
        }
      }
    }
    if (!(row.defect <= row.bound * (1.0 + 1e-12))) {
      std::ostringstream msg;
      msg << "krylov_bogolioubov: defect " << row.defect << " exceeds 2/n at n = " << n;
      throw AssertionFailure(msg.str());
    }
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const AtomicMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : mu.atoms()) atoms.push_back({{"position", a.position}, {"weight", a.weight}});
  return {{"kind", "atomic"}, {"atoms", atoms}};
}

nlohmann::json to_json(const GridMeasure& mu) {
  return {{"kind", "grid"}, {"resolution", mu.resolution}, {"masses", mu.masses}};
}

}  // namespace rdspec
