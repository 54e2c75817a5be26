#pragma once

// Monte Carlo draws of (w, x) from P x Lebesgue. Sample i of a statistic uses
// substreams keyed by (master_seed, stream, i) only.

#include <cstdint>
#include <vector>

#include "rdspec/random_system.hpp"

namespace rdspec {

enum class Stream : std::uint64_t {
  first_time = 1,
  hyperbolic = 2,
  bad_set = 3,
  returns = 4,
  spec_stats = 5,
  krylov = 6,
  corollary = 7,
  expansion = 8,
  jacobian = 9,
};

struct Draw {
  BasePoint w;
  std::vector<Symbol> word;  // w_0 .. w_{horizon-1}
  Precise x;                 // carries enough random bits for `word`
};

/// Draw for sample `index`; `sub` separates several draws per index.
Draw draw_sample(const RandomSystem& sys, Stream stream, std::uint64_t index, std::size_t horizon,
                 std::uint64_t sub = 0);

}  // namespace rdspec
