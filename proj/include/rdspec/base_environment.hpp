#pragma once

// The base system (X, theta, P): two-sided Bernoulli sequences over a finite
// alphabet, realized lazily from a counter-based generator.

#include <cstdint>
#include <span>
#include <vector>

namespace rdspec {

using Symbol = int;

/// SplitMix64 finalizer; the counter-based mixing step for all substreams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of substream `index` of family `stream` under `master`.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream,
                                       std::uint64_t index) {
  return mix64(mix64(master ^ mix64(stream + 0x5851f42d4c957f2dULL)) + index);
}

/// A point w of X: the sequence realized from `seed`, viewed from `position`.
/// Symbol j of w is symbol (position + j) of the sequence, so theta^k(w) is
/// the same seed at position + k.
struct BasePoint {
  std::uint64_t seed = 0;
  std::int64_t position = 0;

  BasePoint shifted(std::int64_t k = 1) const { return {seed, position + k}; }
  BasePoint unshifted(std::int64_t k = 1) const { return {seed, position - k}; }
  friend bool operator==(const BasePoint&, const BasePoint&) = default;
};

/// Realized symbols on an integer window [lo, hi).
struct SymbolWindow {
  std::int64_t lo = 0;
  std::vector<Symbol> symbols;

  std::int64_t hi() const { return lo + static_cast<std::int64_t>(symbols.size()); }
  Symbol at(std::int64_t i) const { return symbols.at(static_cast<std::size_t>(i - lo)); }
};

class BaseEnvironment {
 public:
  BaseEnvironment() = default;
  /// Throws ConfigError if weights are not a probability vector.
  BaseEnvironment(std::vector<double> weights, std::uint64_t master_seed);

  int alphabet_size() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  std::uint64_t master_seed() const { return master_seed_; }

  /// Symbol i (i in Z) of the sequence generated from `seed`. Pure in (seed, i).
  Symbol symbol(std::uint64_t seed, std::int64_t i) const;
  Symbol symbol(std::int64_t i) const { return symbol(master_seed_, i); }

  /// Symbol j of theta^j(w), i.e. w_j.
  Symbol symbol(const BasePoint& w, std::int64_t j) const {
    return symbol(w.seed, w.position + j);
  }

  /// w_0 ... w_{n-1}.
  std::vector<Symbol> word(const BasePoint& w, std::size_t n) const;

  SymbolWindow realize(std::int64_t lo, std::int64_t hi) const;
  SymbolWindow realize(std::uint64_t seed, std::int64_t lo, std::int64_t hi) const;

  /// The master point (master seed, position 0).
  BasePoint origin() const { return {master_seed_, 0}; }

  /// Independent P-distributed base point for Monte Carlo sample `index`.
  BasePoint sample_point(std::uint64_t stream, std::uint64_t index) const {
    return {substream_seed(master_seed_, stream, index), 0};
  }

  BaseEnvironment reseeded(std::uint64_t seed) const;

 private:
  std::vector<double> weights_{1.0};
  std::vector<double> cumulative_{1.0};
  std::uint64_t master_seed_ = 0;
};

}  // namespace rdspec
