#include "rdspec/random_system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rdspec/errors.hpp"

namespace rdspec {

RandomSystem::RandomSystem(BaseEnvironment base, std::vector<FiberMap> fibers, double epsilon0,
                           double c, double rho)
    : base_(std::move(base)), fibers_(std::move(fibers)), epsilon0_(epsilon0), c_(c), rho_(rho) {
  if (fibers_.size() != static_cast<std::size_t>(base_.alphabet_size())) {
    throw ConfigError("fibers: expected one fiber map per symbol (" +
                      std::to_string(base_.alphabet_size()) + "), got " +
                      std::to_string(fibers_.size()));
  }
  if (!(epsilon0_ > 0.0)) throw ConfigError("epsilon0: must be positive");
  if (!(c_ > 0.0)) throw ConfigError("c: must be positive");
  if (!(rho_ > 0.0 && rho_ < 1.0)) throw ConfigError("rho: must lie in (0,1)");
}

RandomSystem RandomSystem::single(FiberMap f, double epsilon0, double c, double rho,
                                  std::uint64_t seed) {
  return RandomSystem(BaseEnvironment({1.0}, seed), {std::move(f)}, epsilon0, c, rho);
}

int RandomSystem::max_degree() const {
  int d = 0;
  for (const FiberMap& f : fibers_) d = std::max(d, f.degree());
  return d;
}

double RandomSystem::max_slope() const {
  double s = 0.0;
  for (const FiberMap& f : fibers_) s = std::max(s, f.max_slope());
  return s;
}

RandomSystem RandomSystem::with_seed(std::uint64_t seed) const {
  RandomSystem copy(*this);
  copy.base_ = base_.reseeded(seed);
  return copy;
}

RandomSystem RandomSystem::with_exponent(double c) const {
  return RandomSystem(base_, fibers_, epsilon0_, c, rho_);
}

Bits required_precision(const RandomSystem& sys, std::span<const Symbol> word, Bits guard) {
  Bits bits = 64 + guard;
  for (Symbol s : word) {
    bits += static_cast<Bits>(std::ceil(std::log2(std::max(1.0, sys.fiber(s).max_slope())) + 1e-9));
  }
  return bits;
}

PreciseOrbit iterate_precise(const RandomSystem& sys, std::span<const Symbol> word,
                             const Precise& x, Bits bits) {
  PreciseOrbit orbit;
  orbit.precision = bits;
  orbit.symbols.assign(word.begin(), word.end());
  orbit.points.reserve(word.size() + 1);
  orbit.pieces.reserve(word.size());
  Precise current(x, bits);
  current = wrap(current);
  orbit.points.push_back(current);
  for (Symbol s : word) {
    const FiberMap& f = sys.fiber(s);
    orbit.pieces.push_back(f.piece_index(current));
    current = f.apply(current);
    orbit.points.push_back(current);
  }
  return orbit;
}

Orbit PreciseOrbit::to_orbit(const RandomSystem& sys, const BasePoint& base) const {
  Orbit out;
  out.base = base;
  out.symbols = symbols;
  out.points.reserve(points.size());
  for (const Precise& p : points) out.points.push_back(wrap(p.get_d()));
  out.piece_itinerary = pieces;
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const FiberMap& f = sys.fiber(symbols[j]);
    out.log_contractions.push_back(f.log_inverse_lipschitz_of_piece(pieces[j]));
    out.branch_itinerary.push_back(f.pieces()[pieces[j]].branch);
  }
  return out;
}

namespace {

// Iterates with precision dropped as the remaining word shortens: the error
// committed at step j only has to survive the expansion of steps j..n-1.
Orbit iterate_tapering(const RandomSystem& sys, std::span<const Symbol> word, Precise current,
                       const BasePoint& base) {
  constexpr Bits kGuard = 96;
  const std::size_t n = word.size();
  std::vector<Bits> remaining(n + 1, 64 + kGuard);
  for (std::size_t j = n; j-- > 0;) {
    remaining[j] = remaining[j + 1] +
                   static_cast<Bits>(std::ceil(std::log2(sys.fiber(word[j]).max_slope()) + 1e-9));
  }
  Orbit out;
  out.base = base;
  out.symbols.assign(word.begin(), word.end());
  out.points.reserve(n + 1);
  out.log_contractions.reserve(n);
  out.branch_itinerary.reserve(n);
  out.piece_itinerary.reserve(n);
  Precise x(0, remaining[0]);
  x = current;
  x = wrap(x);
  out.points.push_back(wrap(x.get_d()));
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 64 == 0 && x.get_prec() > remaining[j] + 128) x.set_prec(remaining[j] + 64);
    const FiberMap& f = sys.fiber(word[j]);
    const std::size_t piece = f.piece_index(x);
    out.piece_itinerary.push_back(piece);
    out.log_contractions.push_back(f.log_inverse_lipschitz_of_piece(piece));
    out.branch_itinerary.push_back(f.pieces()[piece].branch);
    x = f.apply(x);
    out.points.push_back(wrap(x.get_d()));
  }
  return out;
}

}  // namespace

Orbit iterate_word(const RandomSystem& sys, std::span<const Symbol> word, const Precise& x) {
  return iterate_tapering(sys, word, x, {});
}

Orbit iterate_word(const RandomSystem& sys, std::span<const Symbol> word, double x) {
  return iterate_tapering(sys, word, Precise(x, 64), {});
}

Orbit iterate(const RandomSystem& sys, const BasePoint& w, double x, std::size_t n) {
  const std::vector<Symbol> word = sys.word(w, n);
  return iterate_tapering(sys, word, Precise(x, 64), w);
}

Orbit iterate(const RandomSystem& sys, const BasePoint& w, const Precise& x, std::size_t n) {
  const std::vector<Symbol> word = sys.word(w, n);
  return iterate_tapering(sys, word, x, w);
}

}  // namespace rdspec
