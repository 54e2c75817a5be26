#include "rdspec/sampling.hpp"

#include <random>

namespace rdspec {

Draw draw_sample(const RandomSystem& sys, Stream stream, std::uint64_t index, std::size_t horizon,
                 std::uint64_t sub) {
  const std::uint64_t family = static_cast<std::uint64_t>(stream) * 1024 + sub;
  Draw d;
  d.w = sys.base().sample_point(2 * family, index);
  d.word = sys.word(d.w, horizon);
  std::mt19937_64 rng(substream_seed(sys.base().master_seed(), 2 * family + 1, index));
  d.x = sample_uniform_precise(rng, required_precision(sys, d.word));
  return d;
}

}  // namespace rdspec
