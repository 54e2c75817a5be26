#include <cmath>
#include <set>

#include "doctest.h"
#include "rdspec/errors.hpp"
#include "rdspec/exactness.hpp"
#include "rdspec/presets.hpp"
#include "rdspec/system_json.hpp"
#include "rdspec/validation.hpp"
#include "support.hpp"

using namespace rdspec;

TEST_CASE("circle metric") {
  oracle::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    const double y = rng.uniform();
    CHECK(circle_distance(x, x) == 0.0);
    CHECK(circle_distance(x, y) == doctest::Approx(circle_distance(y, x)).epsilon(1e-15));
    CHECK(circle_distance(x, y) <= 0.5);
  }
  CHECK(circle_distance(0.1, 0.9) == doctest::Approx(0.2));
  CHECK(Arc::around(0.95, 0.1, 0.1).contains(0.02));
  CHECK_FALSE(Arc::around(0.95, 0.1, 0.1).contains(0.1));
}

TEST_CASE("base environment") {
  BaseEnvironment base({0.2, 0.8}, 42);
  SUBCASE("lazy extension is order independent") {
    const Symbol later = base.symbol(-17);
    const SymbolWindow window = base.realize(-100, 100);
    CHECK(window.at(-17) == later);
    for (std::int64_t i = -100; i < 100; ++i) CHECK(window.at(i) == base.symbol(i));
  }
  SUBCASE("shift then unshift restores symbols") {
    const BasePoint w = base.origin();
    for (std::int64_t j = -5; j < 5; ++j) {
      CHECK(base.symbol(w.shifted(3).unshifted(3), j) == base.symbol(w, j));
      CHECK(base.symbol(w.shifted(3), j) == base.symbol(w, j + 3));
    }
  }
  SUBCASE("frequencies follow the weights") {
    int ones = 0;
    for (std::int64_t i = 0; i < 100000; ++i) ones += base.symbol(i);
    CHECK(ones / 100000.0 == doctest::Approx(0.8).epsilon(0.01));
  }
  CHECK_THROWS_AS(BaseEnvironment({0.5, 0.4}, 0), ConfigError);
  CHECK_THROWS_AS(BaseEnvironment({1.2, -0.2}, 0), ConfigError);
  CHECK_NOTHROW(BaseEnvironment({0.5, 0.5 + 1e-13}, 0));
}

TEST_CASE("fiber map structure") {
  SUBCASE("malformed breakpoints name the branch") {
    try {
      FiberMap(2, {0.0, 0.7, 0.6}, {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 2.0, 1.0, 1);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("branch 1") != std::string::npos);
    }
  }
  SUBCASE("branch image must cover the circle") {
    CHECK_THROWS_AS(
        FiberMap(2, {0.0, 0.5, 1.0}, {{0.0, 0.5, 1.5, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 2.0, 1.0, 1),
        ConfigError);
  }
  const FiberMap trap = FiberMap::trap();
  CHECK(trap.degree() == 4);
  CHECK(trap.max_slope() == doctest::Approx(3.0 / 0.7));
  CHECK(trap.inverse_lipschitz(0.01) == doctest::Approx(1.0 / 0.9));
  CHECK(trap.inverse_lipschitz(0.1) == doctest::Approx(0.25 / 0.955));
  CHECK(trap.in_contracting_region(0.049));
  CHECK_FALSE(trap.in_contracting_region(0.05));
  CHECK(trap.branches_meeting_contracting_region() == 1);
}

TEST_CASE("preimages") {
  const FiberMap d = FiberMap::doubling();
  auto half = d.preimages(0.5);
  REQUIRE(half.size() == 2);
  CHECK(half[0].x == 0.25);
  CHECK(half[1].x == 0.75);
  auto zero = d.preimages(0.0);
  CHECK(zero[0].x == 0.0);
  CHECK(zero[1].x == 0.5);

  const FiberMap trap = FiberMap::trap();
  auto pre = trap.preimages(0.7);
  REQUIRE(pre.size() == 4);
  for (std::size_t j = 0; j < pre.size(); ++j) {
    CHECK(pre[j].branch == static_cast<int>(j));
    CHECK(circle_distance(trap.apply(pre[j].x), 0.7) <= 1e-12);
  }

  SUBCASE("every point appears among the preimages of its image") {
    oracle::Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
      const double x = rng.uniform();
      bool found = false;
      for (const Preimage& p : trap.preimages(trap.apply(x))) {
        found = found || circle_distance(p.x, x) <= 1e-12;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("iterate") {
  const RandomSystem doubling = doubling_system();
  const Orbit o = iterate(doubling, doubling.base().origin(), 0.3, 2);
  CHECK(o.points[0] == 0.3);
  CHECK(o.points[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(o.points[2] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(o.log_contractions[0] == doctest::Approx(-std::log(2.0)));
  CHECK(o.log_contractions[1] == doctest::Approx(-std::log(2.0)));

  const Orbit zero = iterate(doubling, doubling.base().origin(), 0.0, 50);
  for (double p : zero.points) CHECK(p == 0.0);

  SUBCASE("mixed system against the exact reference evaluator") {
    const RandomSystem sys = mixed_system(42);
    const BasePoint w = sys.base().origin();
    const Orbit orbit = iterate(sys, w, 0.123, 10);
    const std::vector<mpq_class> ref = oracle::orbit_exact(sys, sys.word(w, 10), mpq_class(0.123));
    for (std::size_t j = 0; j <= 10; ++j) {
      CHECK(std::fabs(orbit.points[j] - ref[j].get_d()) <= 1e-14);
    }
    for (std::size_t j = 0; j < 10; ++j) {
      const FiberMap& f = sys.fiber(orbit.symbols[j]);
      CHECK(orbit.log_contractions[j] ==
            doctest::Approx(std::log(f.inverse_lipschitz(ref[j].get_d()))));
    }
  }

  SUBCASE("long precise orbits agree with exact arithmetic") {
    const RandomSystem sys = mixed_system(5);
    const BasePoint w = sys.base().sample_point(1, 3);
    std::mt19937_64 gen(9);
    const Precise x = sample_uniform_precise(gen, 2048);
    const Orbit orbit = iterate(sys, w, x, 400);
    mpq_class exact(x);
    std::vector<mpq_class> ref = oracle::orbit_exact(sys, sys.word(w, 400), exact);
    for (std::size_t j = 0; j <= 400; ++j) {
      CHECK(circle_distance(orbit.points[j], ref[j].get_d()) <= 1e-14);
    }
  }

  SUBCASE("composition over the shifted base") {
    const RandomSystem sys = mixed_system(42);
    const BasePoint w = sys.base().sample_point(2, 0);
    std::mt19937_64 gen(1);
    const Precise x = sample_uniform_precise(gen, 1024);
    const PreciseOrbit whole =
        iterate_precise(sys, sys.word(w, 60), x, required_precision(sys, sys.word(w, 60)));
    const Orbit tail = iterate(sys, w.shifted(40), whole.points[40], 20);
    for (std::size_t j = 0; j <= 20; ++j) {
      CHECK(circle_distance(tail.points[j], whole.points[40 + j].get_d()) <= 1e-14);
    }
  }
}

TEST_CASE("validate_system") {
  const ValidationReport doubling_bad = validate_system(doubling_system(0.3));
  CHECK(doubling_bad.violated() == std::vector<std::string>{"(V)"});
  CHECK(doubling_bad.at("(V)").value == doctest::Approx(std::pow(2.0, -0.1)));

  const ValidationReport doubling_ok = validate_system(doubling_system(0.03));
  CHECK(doubling_ok.valid());
  CHECK(doubling_ok.at("(H1)").witness.find("automatically") != std::string::npos);

  // 0.95 log(1/0.9) - 0.05 log(3.82) = +0.0331 > -0.04: (V) fails, and the
  // forward-invariant contracting region blocks exactness of balls inside it.
  const ValidationReport trap = validate_system(trap_system());
  const double witness = std::pow(1.0 / 0.9, 0.95) * std::pow(3.82, -0.05);
  CHECK(trap.at("(V)").value == doctest::Approx(witness));
  CHECK_FALSE(trap.at("(V)").holds);
  CHECK_FALSE(trap.at("(III)").holds);
  CHECK(trap.at("(I)").holds);
  CHECK(trap.at("(II)").holds);
  CHECK(trap.at("(IV)").holds);

  SUBCASE("q = d violates (II)") {
    FiberMap f(2, {0.0, 0.5, 1.0}, {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 2.0, 1.0, 2);
    const auto report = validate_system(RandomSystem::single(f, 0.1, 0.01, 0.5));
    CHECK_FALSE(report.at("(II)").holds);
  }
  SUBCASE("monotone in sigma") {
    FiberMap loose(2, {0.0, 0.5, 1.0}, {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 2.5, 1.0,
                   1);
    CHECK_FALSE(validate_system(RandomSystem::single(loose, 0.5, 0.03, 0.9)).at("(I)").holds);
    FiberMap tight(2, {0.0, 0.5, 1.0}, {{0.0, 0.5, 2.0, 0.0}, {0.5, 1.0, 2.0, 0.0}}, {}, 1.5, 1.0,
                   1);
    CHECK(validate_system(RandomSystem::single(tight, 0.5, 0.03, 0.9)).at("(I)").holds);
  }
}

TEST_CASE("exactness_time") {
  const RandomSystem doubling = doubling_system();
  oracle::Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    CHECK(exactness_time(doubling, doubling.base().origin(), rng.uniform(), 0.1) == 3);
  }
  CHECK(exactness_time(doubling, doubling.base().origin(), 0.2, 0.5) == 0);
  CHECK(exactness_time(doubling, doubling.base().origin(), 0.2, 0.7) == 0);

  const RandomSystem trap = trap_system();
  std::size_t previous = 0;
  for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01}) {
    const std::size_t n = exactness_time(trap, trap.base().origin(), 0.6, eps);
    CHECK(n >= previous);
    previous = n;
  }
  CHECK_THROWS_AS(exactness_time(trap, trap.base().origin(), 0.02, 0.01), NumericalError);
}

TEST_CASE("system json round trip") {
  const RandomSystem sys = mixed_system(42);
  const RandomSystem back = system_from_json(to_json(sys));
  CHECK(to_json(back) == to_json(sys));
  nlohmann::json broken = to_json(sys);
  broken["fibers"][1].erase("sigma");
  try {
    system_from_json(broken);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "system.fibers[1].sigma: missing required field");
  }
}
