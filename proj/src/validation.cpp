#include "rdspec/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdspec/errors.hpp"
#include "rdspec/exactness.hpp"

namespace rdspec {

namespace {

constexpr double kSlack = 1e-12;
constexpr int kExactnessCenters = 16;
constexpr double kExactnessRadius = 0.01;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Length of [lo, hi) covered by the contracting region.
double overlap_with_region(const FiberMap& f, double lo, double hi) {
  double total = 0.0;
  for (const Interval& a : f.contracting_region()) {
    total += std::max(0.0, std::min(hi, a.hi) - std::max(lo, a.lo));
  }
  return total;
}

HypothesisCheck check_one(const RandomSystem& sys) {
  HypothesisCheck out{"(I)", true, 0.0, {}};
  double worst = 0.0;
  for (std::size_t s = 0; s < sys.fibers().size(); ++s) {
    const FiberMap& f = sys.fibers()[s];
    for (const AffinePiece& p : f.pieces()) {
      const double L = 1.0 / p.slope;
      const double inside = overlap_with_region(f, p.lo, p.hi);
      if (inside > 0.0 && L > f.L_bound() * (1.0 + kSlack)) {
        out.holds = false;
        out.witness = "symbol " + std::to_string(s) + ": L=" + fmt(L) + " > L_bound=" +
                      fmt(f.L_bound()) + " on A at x=" + fmt(p.lo);
        return out;
      }
      if (inside < (p.hi - p.lo) && L > (1.0 / f.sigma()) * (1.0 + kSlack)) {
        out.holds = false;
        out.witness = "symbol " + std::to_string(s) + ": L=" + fmt(L) + " > 1/sigma=" +
                      fmt(1.0 / f.sigma()) + " off A at x=" + fmt(p.lo);
        return out;
      }
      if (inside < (p.hi - p.lo)) worst = std::max(worst, L * f.sigma());
    }
  }
  out.value = worst;
  out.witness = "max L*sigma off A = " + fmt(worst);
  return out;
}

HypothesisCheck check_two(const RandomSystem& sys) {
  HypothesisCheck out{"(II)", true, 0.0, {}};
  for (std::size_t s = 0; s < sys.fibers().size(); ++s) {
    const FiberMap& f = sys.fibers()[s];
    const int meeting = f.branches_meeting_contracting_region();
    if (f.q() >= f.degree()) {
      out.holds = false;
      out.value = f.q();
      out.witness = "symbol " + std::to_string(s) + ": q=" + std::to_string(f.q()) +
                    " >= deg=" + std::to_string(f.degree());
      return out;
    }
    if (meeting > f.q()) {
      out.holds = false;
      out.value = meeting;
      out.witness = "symbol " + std::to_string(s) + ": A meets " + std::to_string(meeting) +
                    " injectivity domains, q=" + std::to_string(f.q());
      return out;
    }
  }
  out.witness = "q < deg for every symbol";
  return out;
}

HypothesisCheck check_three(const RandomSystem& sys) {
  HypothesisCheck out{"(III)", true, 0.0, {}};
  std::size_t worst = 0;
  for (int i = 0; i < kExactnessCenters; ++i) {
    const double x = (i + 0.5) / kExactnessCenters;
    try {
      worst = std::max(worst, exactness_time(sys, sys.base().origin(), x, kExactnessRadius));
    } catch (const NumericalError&) {
      out.holds = false;
      out.witness = "exactness not certified within max_iter for B(" + fmt(x) + ", " +
                    fmt(kExactnessRadius) + ")";
      return out;
    }
  }
  out.value = static_cast<double>(worst);
  out.witness = "max exactness time over sample balls = " + std::to_string(worst);
  return out;
}

HypothesisCheck check_four(const RandomSystem& sys) {
  HypothesisCheck out{"(IV)", true, 0.0, {}};
  const double lhs = std::exp(sys.epsilon0());
  double tightest = INFINITY;
  for (std::size_t s = 0; s < sys.fibers().size(); ++s) {
    const FiberMap& f = sys.fibers()[s];
    const double ratio =
        f.q() == 0 ? INFINITY : static_cast<double>(f.degree()) / static_cast<double>(f.q());
    tightest = std::min(tightest, ratio);
    if (!(lhs < ratio)) {
      out.holds = false;
      out.witness = "symbol " + std::to_string(s) + ": exp(epsilon0)=" + fmt(lhs) +
                    " >= deg/q=" + fmt(ratio);
    }
  }
  out.value = lhs;
  if (out.holds) out.witness = "exp(epsilon0)=" + fmt(lhs) + " < min deg/q=" + fmt(tightest);
  return out;
}

HypothesisCheck check_five(const RandomSystem& sys) {
  HypothesisCheck out{"(V)", true, 0.0, {}};
  const double lhs =
      std::pow(l_hat(sys), sys.rho()) * std::pow(sigma_hat(sys), -(1.0 - sys.rho()));
  const double rhs = std::exp(-2.0 * sys.c());
  out.value = lhs;
  out.holds = lhs < rhs;
  out.witness = "L_hat^rho * sigma_hat^-(1-rho) = " + fmt(lhs) + (out.holds ? " < " : " >= ") +
                "exp(-2c) = " + fmt(rhs);
  return out;
}

HypothesisCheck check_h2(const RandomSystem& sys) {
  double inf_L = INFINITY;
  for (const FiberMap& f : sys.fibers()) inf_L = std::min(inf_L, 1.0 / f.max_slope());
  HypothesisCheck out{"(H2)", inf_L > 0.0, inf_L, "inf L = " + fmt(inf_L)};
  return out;
}

}  // namespace

std::vector<std::string> ValidationReport::violated() const {
  std::vector<std::string> names;
  for (const HypothesisCheck& c : checks) {
    if (!c.holds) names.push_back(c.hypothesis);
  }
  return names;
}

const HypothesisCheck& ValidationReport::at(const std::string& hypothesis) const {
  for (const HypothesisCheck& c : checks) {
    if (c.hypothesis == hypothesis) return c;
  }
  throw std::out_of_range("no check named " + hypothesis);
}

double l_hat(const RandomSystem& sys) {
  double L = 1.0;
  for (const FiberMap& f : sys.fibers()) {
    if (f.has_contracting_region()) L = std::max(L, f.L_bound());
  }
  return L;
}

double sigma_hat(const RandomSystem& sys) {
  double s = INFINITY;
  for (const FiberMap& f : sys.fibers()) s = std::min(s, f.sigma());
  return s;
}

ValidationReport validate_system(const RandomSystem& sys) {
  ValidationReport report;
  report.checks.push_back(check_one(sys));
  report.checks.push_back(check_two(sys));
  report.checks.push_back(check_three(sys));
  report.checks.push_back(check_four(sys));
  report.checks.push_back(check_five(sys));
  report.checks.push_back(check_h2(sys));
  const std::string automatic =
      "holds automatically for piecewise-affine maps with finitely many pieces";
  report.checks.push_back({"(H1)", true, 0.0, automatic});
  report.checks.push_back({"(H3)", true, 0.0, automatic});
  return report;
}

}  // namespace rdspec
