#include "rdspec/base_environment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdspec/errors.hpp"

namespace rdspec {

BaseEnvironment::BaseEnvironment(std::vector<double> weights, std::uint64_t master_seed)
    : weights_(std::move(weights)), master_seed_(master_seed) {
  if (weights_.empty()) throw ConfigError("weights: alphabet must be nonempty");
  double total = 0.0;
  cumulative_.clear();
  for (std::size_t s = 0; s < weights_.size(); ++s) {
    if (!(weights_[s] >= 0.0) || !std::isfinite(weights_[s])) {
      throw ConfigError("weights[" + std::to_string(s) + "]: must be a finite nonnegative number");
    }
    total += weights_[s];
    cumulative_.push_back(total);
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw ConfigError("weights: must sum to 1 within 1e-12 (sum is " + std::to_string(total) + ")");
  }
}

Symbol BaseEnvironment::symbol(std::uint64_t seed, std::int64_t i) const {
  if (weights_.size() == 1) return 0;
  const std::uint64_t bits = mix64(seed ^ mix64(static_cast<std::uint64_t>(i)));
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  // Draws beyond the last cumulative value (rounding) fall on the last
  // symbol with positive weight.
  for (std::size_t s = 0; s < cumulative_.size(); ++s) {
    if (u < cumulative_[s] && weights_[s] > 0.0) return static_cast<Symbol>(s);
  }
  for (std::size_t s = weights_.size(); s-- > 0;) {
    if (weights_[s] > 0.0) return static_cast<Symbol>(s);
  }
  return 0;
}

std::vector<Symbol> BaseEnvironment::word(const BasePoint& w, std::size_t n) const {
  std::vector<Symbol> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = symbol(w, static_cast<std::int64_t>(j));
  return out;
}

SymbolWindow BaseEnvironment::realize(std::int64_t lo, std::int64_t hi) const {
  return realize(master_seed_, lo, hi);
}

SymbolWindow BaseEnvironment::realize(std::uint64_t seed, std::int64_t lo, std::int64_t hi) const {
  SymbolWindow window;
  window.lo = lo;
  for (std::int64_t i = lo; i < hi; ++i) window.symbols.push_back(symbol(seed, i));
  return window;
}

BaseEnvironment BaseEnvironment::reseeded(std::uint64_t seed) const {
  BaseEnvironment copy(*this);
  copy.master_seed_ = seed;
  return copy;
}

}  // namespace rdspec
