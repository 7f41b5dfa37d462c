#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "../support/oracles.hpp"
#include "slt/errors.hpp"
#include "slt/schrodinger.hpp"

using namespace slt;

namespace {

double sup_diff(const WaveField& a, const WaveField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid g(2, 8.0, 32);
  CHECK(g.size() == 1024);
  CHECK(g.spacing() == doctest::Approx(0.25));
  CHECK(g.cell_volume() == doctest::Approx(0.0625));
  CHECK(g.nyquist() == doctest::Approx(std::numbers::pi * 4));
  CHECK(g.signed_index(31) == -1);
  CHECK(g.array_index(-1) == 31);
  const auto p = g.point(g.flatten(3, 5));
  CHECK(p[0] == doctest::Approx(0.75));
  CHECK(p[1] == doctest::Approx(1.25));
  CHECK_THROWS(Grid(1, 8.0, 24));
}

TEST_CASE("band-limited fields have unit mass and no leakage") {
  const Grid g(1, 16.0, 64);
  for (auto profile : {Profile::Gaussian, Profile::RandomPhase, Profile::Bump}) {
    const auto u = make_band_limited(g, {{1.0, 0.0}, 1.5}, profile, 9);
    CHECK(mass(u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spectral_mass(u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spectral_leakage(u) <= 1e-14);
  }
  CHECK(parse_profile("random-phase") == Profile::RandomPhase);
  CHECK_THROWS_AS(parse_profile("square"), ConfigurationError);
}

TEST_CASE("unresolvable windows are configuration errors") {
  const Grid g(1, 16.0, 16);
  CHECK_THROWS_AS(check_resolvable(g, {{0.0, 0.0}, 2.0}), ConfigurationError);
  CHECK_THROWS_AS(check_resolvable(g, {{2.8, 0.0}, 0.5}), ConfigurationError);
  CHECK_NOTHROW(check_resolvable(g, {{0.0, 0.0}, 1.0}));
}

TEST_CASE("free evolution matches the Gaussian oracle in 1-D") {
  const double length = 32.0;
  const Grid g(1, length, 256);
  const double xi = 2.0 * std::numbers::pi / length * 3;
  std::vector<Complex> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = oracle::gaussian_packet(g.point(i)[0], 0.0, length, 1.2, 10.0, xi, 6);
  const WaveField u0(g, v, {{xi, 0.0}, 10.0}, 0.0);
  const auto u = propagate(u0, 0.8);
  CHECK(u.time() == doctest::Approx(0.8));
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    err = std::max(err, std::abs(u.values()[i] - oracle::gaussian_packet(g.point(i)[0], 0.8, length, 1.2, 10.0, xi, 12)));
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("propagation is unitary, reversible and a group in 2-D") {
  const Grid g(2, 8.0, 32);
  const auto u = make_band_limited(g, {{1.0, -0.5}, 2.0}, Profile::RandomPhase, 4);
  CHECK(mass(propagate(u, 7.3)) == doctest::Approx(mass(u)).epsilon(1e-13));
  CHECK(sup_diff(propagate(propagate(u, 1.1), -1.1), u) <= 1e-12);
  CHECK(sup_diff(propagate(propagate(u, 0.4), 0.9), propagate(u, 1.3)) <= 1e-12);
}

TEST_CASE("galilean rescale round-trips and moves the window") {
  const Grid g(1, 16.0, 128);
  const double step = 2.0 * std::numbers::pi / 16.0;
  const auto u = make_band_limited(g, {{8 * step, 0.0}, 1.0}, Profile::Gaussian, 1);
  const auto v = galilean_rescale(u, {8 * step, 0.0}, 0.5, RescaleDirection::Forward);
  CHECK(v.grid().length() == doctest::Approx(8.0));
  CHECK(v.window().center[0] == doctest::Approx(0.0));
  CHECK(v.window().radius == doctest::Approx(2.0));
  const auto back = galilean_rescale(v, {8 * step, 0.0}, 0.5, RescaleDirection::Inverse);
  CHECK(back.grid() == g);
  CHECK(sup_diff(back, u) <= 1e-12);
  CHECK_THROWS_AS(galilean_rescale(u, {0.3, 0.0}, 1.0, RescaleDirection::Forward), ConfigurationError);
}

TEST_CASE("snapshots round-trip bit-exactly") {
  const Grid g(2, 8.0, 16);
  auto u = propagate(make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::RandomPhase, 2), 0.3);
  const auto path = std::filesystem::temp_directory_path() / "slt_snapshot_test.bin";
  write_snapshot(u, path.string());
  const auto r = read_snapshot(path.string());
  std::filesystem::remove(path);
  CHECK(r.grid() == g);
  CHECK(r.time() == u.time());
  CHECK(r.values() == u.values());
}
