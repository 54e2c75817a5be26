#pragma once

#include <string>
#include <vector>

#include "rdspec/random_system.hpp"

namespace rdspec {

struct HypothesisCheck {
  std::string hypothesis;  // "(I)", "(II)", ...
  bool holds = true;
  double value = 0.0;      // witnessing quantity
  std::string witness;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;

  /// Names of the violated hypotheses, in report order.
  std::vector<std::string> violated() const;
  bool valid() const { return violated().empty(); }
  const HypothesisCheck& at(const std::string& hypothesis) const;
};

/// L_hat: max L_bound over symbols with a contracting region (1 if none).
double l_hat(const RandomSystem& sys);
/// sigma_hat: min sigma over symbols.
double sigma_hat(const RandomSystem& sys);

/// Checks (I), (II), (III) on sample balls, (IV), (V), (H1)-(H3).
ValidationReport validate_system(const RandomSystem& sys);

}  // namespace rdspec
