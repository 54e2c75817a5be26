#include "rdspec/fiber_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdspec/errors.hpp"

namespace rdspec {

namespace {

constexpr double kStructuralTolerance = 1e-12;
constexpr double kImageTolerance = 1e-9;

[[noreturn]] void structural(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

std::string branch_label(int j) { return "branch " + std::to_string(j); }

}  // namespace

FiberMap::FiberMap(int degree, std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
                   std::vector<Interval> contracting_region, double sigma, double L_bound, int q,
                   std::string name)
    : name_(std::move(name)),
      degree_(degree),
      breakpoints_(std::move(breakpoints)),
      pieces_(std::move(pieces)),
      contracting_(std::move(contracting_region)),
      sigma_(sigma),
      L_bound_(L_bound),
      q_(q) {
  if (degree_ < 2) structural("degree", "must be at least 2");
  if (breakpoints_.size() != static_cast<std::size_t>(degree_) + 1) {
    structural("breakpoints", "expected degree + 1 = " + std::to_string(degree_ + 1) +
                                  " values, got " + std::to_string(breakpoints_.size()));
  }
  if (breakpoints_.front() != 0.0) structural(branch_label(0), "first breakpoint must be 0");
  if (breakpoints_.back() != 1.0) structural(branch_label(degree_ - 1), "last breakpoint must be 1");
  for (int j = 0; j < degree_; ++j) {
    if (!(breakpoints_[j] < breakpoints_[j + 1])) {
      structural(branch_label(j), "breakpoints must be strictly increasing");
    }
  }
  if (pieces_.empty()) structural("pieces", "at least one affine piece per branch is required");
  std::sort(pieces_.begin(), pieces_.end(),
            [](const AffinePiece& a, const AffinePiece& b) { return a.lo < b.lo; });

  double cursor = 0.0;
  int branch = 0;
  double image_cursor = 0.0;
  bool branch_open = false;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    AffinePiece& p = pieces_[i];
    while (branch < degree_ && p.lo >= breakpoints_[branch + 1] - kStructuralTolerance) ++branch;
    if (branch >= degree_) structural("pieces", "piece starts at or beyond 1");
    const std::string where = branch_label(branch) + ", piece at " + std::to_string(p.lo);
    if (std::fabs(p.lo - cursor) > kStructuralTolerance) {
      structural(where, "pieces must tile [0,1) contiguously (gap or overlap at " +
                            std::to_string(cursor) + ")");
    }
    p.lo = cursor;
    if (!(p.hi > p.lo)) structural(where, "piece must have positive length");
    if (!(p.slope > 0.0) || !std::isfinite(p.slope)) {
      structural(where, "slope must be positive and finite (orientation-preserving branches)");
    }
    if (p.hi > breakpoints_[branch + 1] + kStructuralTolerance) {
      structural(where, "piece crosses the branch breakpoint " +
                            std::to_string(breakpoints_[branch + 1]));
    }
    const bool first_in_branch = std::fabs(p.lo - breakpoints_[branch]) <= kStructuralTolerance;
    if (first_in_branch) {
      if (branch_open) structural(branch_label(branch - 1), "branch images do not end at 1");
      if (std::fabs(p.image_lo) > kStructuralTolerance) {
        structural(where, "first piece of a branch must start its image at 0");
      }
      p.image_lo = 0.0;
      branch_open = true;
    } else if (std::fabs(p.image_lo - image_cursor) > kImageTolerance) {
      structural(where, "piece images must be contiguous within the branch (expected image_lo " +
                            std::to_string(image_cursor) + ")");
    }
    p.branch = branch;
    image_cursor = p.image_hi();
    cursor = p.hi;
    if (std::fabs(p.hi - breakpoints_[branch + 1]) <= kStructuralTolerance) {
      if (std::fabs(image_cursor - 1.0) > kImageTolerance) {
        structural(branch_label(branch), "branch must map onto [0,1) (image ends at " +
                                             std::to_string(image_cursor) + ")");
      }
      p.hi = breakpoints_[branch + 1];
      branch_open = false;
    }
  }
  if (branch_open || std::fabs(cursor - 1.0) > kStructuralTolerance) {
    structural(branch_label(degree_ - 1), "pieces must cover up to 1");
  }
  for (int j = 0; j < degree_; ++j) {
    bool found = false;
    for (const AffinePiece& p : pieces_) found = found || p.branch == j;
    if (!found) structural(branch_label(j), "branch has no pieces");
  }

  for (std::size_t k = 0; k < contracting_.size(); ++k) {
    const Interval& a = contracting_[k];
    if (!(a.lo >= 0.0 && a.hi <= 1.0 && a.lo < a.hi)) {
      structural("contracting_region[" + std::to_string(k) + "]",
                 "must be a nonempty sub-interval of [0,1]");
    }
  }
  if (!(sigma_ > 1.0)) structural("sigma", "must exceed 1");
  if (!(L_bound_ >= 1.0) || !std::isfinite(L_bound_)) structural("L_bound", "must be at least 1");
  if (q_ < 0) structural("q", "must be nonnegative");

  max_slope_ = 0.0;
  min_slope_ = pieces_.front().slope;
  for (const AffinePiece& p : pieces_) {
    max_slope_ = std::max(max_slope_, p.slope);
    min_slope_ = std::min(min_slope_, p.slope);
    log_inv_slope_.push_back(-std::log(p.slope));
  }
}

FiberMap FiberMap::doubling() {
  return FiberMap(2, {0.0, 0.5, 1.0},
                  {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 2.0, 1.0, 1, "doubling");
}

FiberMap FiberMap::trap() {
  const double width = 0.7 / 3.0;
  const double b2 = 0.3 + width;
  const double b3 = 0.3 + 2.0 * width;
  const double expanding = 3.0 / 0.7;
  return FiberMap(4, {0.0, 0.3, b2, b3, 1.0},
                  {{0.0, 0.05, 0.9, 0.0},
                   {0.05, 0.3, (1.0 - 0.045) / 0.25, 0.045},
                   {0.3, b2, expanding, 0.0},
                   {b2, b3, expanding, 0.0},
                   {b3, 1.0, expanding, 0.0}},
                  {{0.0, 0.05}}, (1.0 - 0.045) / 0.25, 1.0 / 0.9, 1, "trap");
}

std::vector<Preimage> FiberMap::preimages(double y) const {
  y = wrap(y);
  std::vector<Preimage> out;
  out.reserve(static_cast<std::size_t>(degree_));
  std::size_t i = 0;
  for (int j = 0; j < degree_; ++j) {
    // Last piece of branch j whose image starts at or below y.
    std::size_t chosen = i;
    while (i < pieces_.size() && pieces_[i].branch == j) {
      if (pieces_[i].image_lo <= y) chosen = i;
      ++i;
    }
    const AffinePiece& p = pieces_[chosen];
    double x = p.lo + (y - p.image_lo) / p.slope;
    if (x >= p.hi) x = std::nextafter(p.hi, p.lo);
    if (x < p.lo) x = p.lo;
    out.push_back({x, j});
  }
  return out;
}

bool FiberMap::in_contracting_region(double x) const {
  for (const Interval& a : contracting_) {
    if (x >= a.lo && x < a.hi) return true;
  }
  return false;
}

int FiberMap::branches_meeting_contracting_region() const {
  int count = 0;
  for (int j = 0; j < degree_; ++j) {
    const double lo = breakpoints_[j];
    const double hi = breakpoints_[j + 1];
    for (const Interval& a : contracting_) {
      if (std::min(hi, a.hi) - std::max(lo, a.lo) > 0.0) {
        ++count;
        break;
      }
    }
  }
  return count;
}

}  // namespace rdspec
