#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "slt/errors.hpp"
#include "slt/intersection.hpp"

using namespace slt;

TEST_CASE("ball overlaps") {
  CHECK(ball_overlap(0.0, 1.0, 0.5, 1) == doctest::Approx(1.0));
  CHECK(ball_overlap(1.0, 1.0, 1.0, 1) == doctest::Approx(1.0));
  CHECK(ball_overlap(3.0, 1.0, 1.0, 1) == 0.0);
  CHECK(ball_overlap(0.0, 1.0, 0.5, 2) == doctest::Approx(std::numbers::pi * 0.25));
  CHECK(ball_overlap(2.0, 1.0, 1.0, 2) == doctest::Approx(0.0));
  CHECK(ball_overlap(1.0, 1.0, 1.0, 2) == doctest::Approx(2.0 * std::numbers::pi / 3.0 - std::sqrt(3.0) / 2.0));
  CHECK_THROWS_AS(ball_overlap(0.0, 1.0, 1.0, 3), StructuralError);
}

TEST_CASE("identical stationary tubes") {
  const TubeSegment a{0.0, 3.0, {1.0, 1.0}, {1.0, 1.0}, 0.5};
  CHECK(segment_intersection_volume(a, a, 1, 0.0, 0.0, 3.0) == doctest::Approx(3.0));
  CHECK(segment_intersection_volume(a, a, 2, 0.0, 0.0, 3.0) == doctest::Approx(std::numbers::pi * 0.25 * 3.0));
  CHECK(segment_intersection_volume(a, a, 1, 0.0, 1.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("parallel disjoint tubes") {
  const TubeSegment a{0.0, 2.0, {0.0, 0.0}, {2.0, 0.0}, 0.5};
  const TubeSegment b{0.0, 2.0, {3.0, 0.0}, {5.0, 0.0}, 0.5};
  CHECK(segment_intersection_volume(a, b, 1, 0.0, 0.0, 2.0) == 0.0);
  CHECK(segment_intersection_volume(a, b, 2, 0.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("symmetry and monotonicity in the radii") {
  const TubeSegment a{0.0, 1.0, {0.0, 0.0}, {2.0, 1.0}, 0.6};
  const TubeSegment b{0.0, 1.0, {2.0, -0.5}, {0.0, 0.5}, 0.4};
  for (int d : {1, 2}) {
    const double ab = segment_intersection_volume(a, b, d, 0.0, 0.0, 1.0);
    CHECK(ab == doctest::Approx(segment_intersection_volume(b, a, d, 0.0, 0.0, 1.0)).epsilon(1e-12));
    TubeSegment wider = b;
    wider.radius = 0.8;
    CHECK(segment_intersection_volume(a, wider, d, 0.0, 0.0, 1.0) >= ab);
    const double cap = std::min(ball_overlap(0.0, a.radius, a.radius, d), ball_overlap(0.0, b.radius, b.radius, d));
    CHECK(ab <= cap + 1e-12);
  }
}

TEST_CASE("Monte-Carlo oracle agreement in 1-D and 2-D") {
  const TubeSegment a{0.0, 1.0, {0.0, 0.0}, {1.5, 0.5}, 0.7};
  const TubeSegment b{0.0, 1.0, {1.0, -0.2}, {0.0, 0.4}, 0.5};
  for (int d : {1, 2}) {
    const double exact = segment_intersection_volume(a, b, d, 0.0, 0.0, 1.0);
    const double mc = oracle::monte_carlo_volume(a, b, d, 2'000'000, 5 + d);
    CHECK(std::abs(mc - exact) <= 0.01 * exact);
  }
}

TEST_CASE("periodic images in 1-D and the full-circle case") {
  const TubeSegment a{0.0, 1.0, {0.2, 0.0}, {0.2, 0.0}, 0.5};
  const TubeSegment b{0.0, 1.0, {9.9, 0.0}, {9.9, 0.0}, 0.5};
  CHECK(segment_intersection_volume(a, b, 1, 10.0, 0.0, 1.0) == doctest::Approx(0.7));
  CHECK(segment_intersection_volume(a, b, 1, 0.0, 0.0, 1.0) == 0.0);
  const TubeSegment wide{0.0, 1.0, {0.0, 0.0}, {3.0, 0.0}, 6.0};
  CHECK(segment_intersection_volume(a, wide, 1, 10.0, 0.0, 1.0) == doctest::Approx(1.0));
  const TubeSegment big{0.0, 1.0, {0.0, 0.0}, {0.0, 0.0}, 3.0};
  CHECK_THROWS_AS(segment_intersection_volume(big, big, 2, 10.0, 0.0, 1.0), ConfigurationError);
}

TEST_CASE("tube volumes merge vertex times") {
  Tube a, b;
  a.dimension = b.dimension = 1;
  a.times = {0.0, 1.0, 2.0};
  a.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}};
  a.radius = 0.5;
  b.times = {0.0, 2.0};
  b.vertices = {{0.0, 0.0}, {0.0, 0.0}};
  b.radius = 0.5;
  double sum = 0.0;
  for (auto [t0, t1] : {std::pair{0.0, 1.0}, std::pair{1.0, 2.0}}) {
    sum += segment_intersection_volume({t0, t1, a.position(t0), a.position(t1), 0.5},
                                       {t0, t1, b.position(t0), b.position(t1), 0.5}, 1, 0.0, t0, t1);
  }
  CHECK(tube_intersection_volume(a, b, 0.0, 2.0) == doctest::Approx(sum));
  CHECK(tube_intersection_volume(a, b, 0.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("straight crossings follow the velocity-gap law") {
  for (double dv : {4.0, 8.0, 16.0}) {
    const TubeSegment a{-1.0, 1.0, {0.0, 0.0}, {0.0, 0.0}, 0.3};
    const TubeSegment b{-1.0, 1.0, {-dv, 0.0}, {dv, 0.0}, 0.2};
    CHECK(segment_intersection_volume(a, b, 1, 0.0, -1.0, 1.0) ==
          doctest::Approx(straight_crossing_volume(0.3, 0.2, dv)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(straight_crossing_volume(1.0, 1.0, 0.0), PreconditionError);
}
