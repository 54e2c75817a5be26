#include <cmath>

#include "doctest.h"
#include "rdspec/presets.hpp"
#include "rdspec/return_points.hpp"
#include "rdspec/sampling.hpp"
#include "support.hpp"

using namespace rdspec;

TEST_CASE("dynamical_ball") {
  const RandomSystem d = doubling_system();
  const DynamicalBall ball = dynamical_ball(d, d.base().origin(), 0.3, 4, 0.1);
  CHECK(ball.left.get_d() == doctest::Approx(0.1 / 16).epsilon(1e-12));
  CHECK(ball.right.get_d() == doctest::Approx(0.1 / 16).epsilon(1e-12));
  CHECK(ball.arc().contains(0.29376));
  CHECK_FALSE(ball.arc().contains(0.29374));

  const DynamicalBall zero = dynamical_ball(d, d.base().origin(), 0.3, 0, 0.1);
  CHECK(zero.left.get_d() == doctest::Approx(0.1));

  SUBCASE("nested in n and eps; forward images stay close") {
    const RandomSystem sys = mixed_system();
    oracle::Rng rng(5);
    for (std::uint64_t i = 0; i < 20; ++i) {
      const Draw draw = draw_sample(sys, Stream::returns, i, 30);
      double previous = INFINITY;
      for (std::size_t n = 0; n <= 30; n += 3) {
        const DynamicalBall b = dynamical_ball(sys, draw.w, draw.x, n, 0.05);
        const double width = b.left.get_d() + b.right.get_d();
        CHECK(width <= previous * (1 + 1e-12));
        previous = width;
        const DynamicalBall smaller = dynamical_ball(sys, draw.w, draw.x, n, 0.02);
        CHECK(smaller.left <= b.left);
        CHECK(smaller.right <= b.right);
      }
      const DynamicalBall b = dynamical_ball(sys, draw.w, draw.x, 12, 0.05);
      const std::vector<int> word = sys.word(draw.w, 12);
      for (double frac : {-0.999, -0.5, 0.5, 0.999}) {
        Precise y(draw.x, 256);
        Precise step(frac < 0 ? b.left : b.right);
        step *= frac;
        y += step;
        CHECK(oracle::in_dynamical_ball(sys, word, mpq_class(wrap(y)), mpq_class(draw.x), 12, 0.05));
      }
      (void)rng;
    }
  }
}

TEST_CASE("hyperbolic_preball") {
  const RandomSystem d = doubling_system(0.3);
  const PreBall ball = hyperbolic_preball(d, d.base().origin(), Precise(0.3, 64), 5, 0.1);
  for (std::size_t k = 0; k <= 5; ++k) {
    CHECK(ball.left[k].get_d() == doctest::Approx(0.1 / std::pow(2.0, 5 - k)));
  }
  CHECK(ball.worst_certificate <= 0.0);
  CHECK(hyperbolic_preball(d, d.base().origin(), Precise(0.3, 64), 0, 0.1).left[0] == 0.1);
  CHECK_THROWS_AS(hyperbolic_preball(doubling_system(0.8), d.base().origin(), Precise(0.3, 64), 5, 0.1),
                  PreconditionError);
}

TEST_CASE("find_return_point") {
  const RandomSystem d = doubling_system();
  SUBCASE("fixed point") {
    for (std::size_t n : {1, 3, 10}) {
      const ReturnPointResult r = find_return_point(d, d.base().origin(), 0.0, n, 0.05);
      CHECK(r.p == 0.0);
      CHECK(r.K == 0);
      CHECK(r.fixpoint_residual == 0.0);
    }
  }
  SUBCASE("doubling x = 0.3") {
    const ReturnPointResult r = find_return_point(d, d.base().origin(), 0.3, 4, 0.1);
    CHECK(r.period == 6);
    CHECK(r.K == 2);
    CHECK(r.p == doctest::Approx(19.0 / 63.0).epsilon(1e-15));
    CHECK(r.shadow_error < 0.1);
  }
  SUBCASE("mixed system, long orbits, independent re-verification") {
    const RandomSystem sys = mixed_system();
    for (std::uint64_t i = 0; i < 10; ++i) {
      const Draw draw = draw_sample(sys, Stream::returns, i, 900);
      const ReturnPointResult r = find_return_point(sys, draw.w, draw.x, 500, 0.01);
      const ReturnPointCheck check = verify_return_point(sys, draw.w, draw.x, r);
      CHECK(check.ok);
      CHECK(check.shadow_error < 0.01);
      CHECK(check.fixpoint_residual < 1e-10);
      CHECK(r.K == r.trace.hyperbolic_time + r.trace.covering_steps - 500);
    }
  }
  SUBCASE("exact periodic-point oracle") {
    const RandomSystem sys = mixed_system();
    std::size_t checked = 0;
    for (std::uint64_t i = 0; i < 30; ++i) {
      const std::size_t n = 1 + i % 5;
      const Draw draw = draw_sample(sys, Stream::returns, 1000 + i, 64);
      const ReturnPointResult r = find_return_point(sys, draw.w, draw.x, n, 0.05);
      if (r.period > 12 || r.period == 0) continue;
      ++checked;
      const std::vector<int> word = sys.word(draw.w, r.period);
      const mpq_class x_exact(draw.x);
      const auto fixed = oracle::periodic_points_near(sys, word, x_exact, 0.05);
      bool matched = false;
      for (const mpq_class& y : fixed) {
        if (oracle::distance_exact(y, mpq_class(r.p_precise)) < mpq_class(1e-10)) {
          matched = true;
          CHECK(oracle::in_dynamical_ball(sys, word, y, x_exact, n, 0.05));
        }
      }
      CHECK(matched);
    }
    CHECK(checked >= 15);
  }
}

TEST_CASE("specification_statistics") {
  CHECK(specification_statistics(doubling_system(), 0, {50, 100}, 0.01).empty());
  const RandomSystem sys = mixed_system();
  const auto one = specification_statistics(sys, 12, {50, 100, 200}, 0.01, 1);
  const auto two = specification_statistics(sys, 12, {50, 100, 200}, 0.01, 2);
  REQUIRE(one.size() == 3);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].median_K_over_n == two[i].median_K_over_n);
    CHECK(one[i].p90_K_over_n == two[i].p90_K_over_n);
    CHECK(one[i].p90_K_over_n >= one[i].median_K_over_n);
  }
  CHECK(one[2].median_K_over_n <= one[0].median_K_over_n);
}
