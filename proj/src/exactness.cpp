#include "rdspec/exactness.hpp"

#include "rdspec/errors.hpp"

namespace rdspec {

std::size_t exactness_time(const RandomSystem& sys, const BasePoint& w, double x, double eps,
                           std::size_t max_iter) {
  if (!(eps > 0.0)) throw PreconditionError("exactness_time: eps must be positive");
  if (eps >= 0.5) return 0;
  Precise start(x, 128);
  start -= eps;
  start = wrap(start);
  Precise length(2.0 * eps, 128);
  for (std::size_t n = 1; n <= max_iter; ++n) {
    const FiberMap& f = sys.fiber_at(w, static_cast<std::int64_t>(n) - 1);
    length = push_arc(f, start, length);
    if (length >= 1.0) return n;
  }
  throw NumericalError("exactness not certified within max_iter (" + std::to_string(max_iter) +
                       ")");
}

}  // namespace rdspec
