#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "slt/errors.hpp"
#include "slt/mu_kernel.hpp"

using namespace slt;

namespace {

std::vector<int> all_sites(const MuKernel& mu) {
  std::vector<int> s(mu.site_count());
  std::iota(s.begin(), s.end(), 0);
  return s;
}

}  // namespace

TEST_CASE("kernel construction rejects unsupported grids") {
  CHECK_THROWS_AS(MuKernel(Grid(1, 16.0, 32), 2.0), ConfigurationError);
  CHECK_THROWS_AS(MuKernel(Grid(1, 12.5, 64), 2.0), ConfigurationError);
  CHECK_THROWS_AS(MuKernel(Grid(1, 16.0, 64), 0.5), ConfigurationError);
  const MuKernel mu(Grid(1, 16.0, 64), 2.0);
  CHECK(mu.lattice_side() == 16);
  CHECK(mu.subdivision() == 4);
  CHECK(mu.site_count() == 16);
}

TEST_CASE("integer translates form a partition of unity") {
  for (auto [d, length, points] : {std::tuple{1, 16.0, 64}, std::tuple{1, 4.0, 64}, std::tuple{2, 8.0, 32}}) {
    const MuKernel mu(Grid(d, length, points), 2.0);
    for (double x : mu.translate_sum(all_sites(mu))) CHECK(std::abs(x - 1.0) <= 1e-10);
    const double h = mu.grid().cell_volume();
    double integral = 0.0;
    for (double x : mu.grid_values()) {
      CHECK(x >= 0.0);
      integral += h * x;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("kernel values decay like the base profile") {
  const MuKernel mu(Grid(1, 16.0, 64), 2.0);
  CHECK(mu.base_profile({0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(mu.base_profile({1.0, 0.0}) == doctest::Approx(std::pow(2.0, -5.0)));
  CHECK(mu({0.0, 0.0}) > mu({2.0, 0.0}));
  CHECK(mu({2.0, 0.0}) > mu({4.0, 0.0}));
  CHECK(mu({1.5, 0.0}) == doctest::Approx(mu({-1.5, 0.0})));
}

TEST_CASE("site integrals agree with direct quadrature and sum to the total") {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto u = make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::RandomPhase, 3);
  const auto f = intensity(u);
  const auto s = mu.site_integrals(f);
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  CHECK(total == doctest::Approx(mass(u)).epsilon(1e-12));
  for (int a : {0, 5, 11}) {
    const auto ma = mu.translate_sum(std::vector<int>{a});
    double direct = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) direct += g.cell_volume() * f[i] * ma[i];
    CHECK(s[a] == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("locally constant constant is finite and zero for the zero field") {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto u = make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::RandomPhase, 5);
  const double c = verify_lc(u, mu);
  CHECK(std::isfinite(c));
  CHECK(c > 0.0);
  CHECK(verify_lc(WaveField::zero(g, {{0.0, 0.0}, 1.0}), mu) == 0.0);
}

TEST_CASE("finite speed holds for small tau and fails for large tau") {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto u = make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::Gaussian, 1);
  const auto small = verify_fs(u, mu, 0.25, {50, 4, 1, 1e-12});
  CHECK(small.passed);
  CHECK(small.checks > 0);
  const auto large = verify_fs(u, mu, 4.0, {50, 4, 1, 1e-12});
  CHECK_FALSE(large.passed);
  CHECK_FALSE(large.witness.set.empty());
}

TEST_CASE("test-set families are deterministic and include the structured sets") {
  const MuKernel mu(Grid(2, 8.0, 32), 2.0);
  const auto a = fs_test_sets(mu, 20, 7);
  const auto b = fs_test_sets(mu, 20, 7);
  CHECK(a == b);
  CHECK(a.front().size() == mu.site_count());
  bool singleton = false;
  for (const auto& s : a) singleton = singleton || s.size() == 1;
  CHECK(singleton);
}

TEST_CASE("calibration returns a passing tau with the safety factor") {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  std::vector<WaveField> fields;
  for (int i = 0; i < 3; ++i) fields.push_back(make_band_limited(g, {{0.0, 0.0}, 2.0}, Profile::RandomPhase, 40 + i));
  CalibrationOptions opts;
  opts.fs.random_subsets = 40;
  const auto r = calibrate_tau(fields, mu, opts);
  CHECK(r.tau == doctest::Approx(0.5 * r.tau_passing));
  for (const auto& u : fields) CHECK(verify_fs(u, mu, r.tau_passing, opts.fs).passed);
  opts.tau_floor = 10.0;
  CHECK_THROWS_AS(calibrate_tau(fields, mu, opts), CalibrationError);
}

TEST_CASE("kernel lemma constants are finite") {
  const MuKernel mu(Grid(1, 16.0, 64), 2.0);
  const auto sets = fs_test_sets(mu, 20, 3);
  std::vector<double> k(mu.grid().size(), 0.0);
  k[0] = 1.0;
  k[1] = -0.5;
  const auto r = verify_kernel_lemmas(mu, sets, {k});
  CHECK(r.finite);
  CHECK(std::isfinite(r.gradient_constant));
  CHECK(r.convolution_constant <= 1.0 + 1e-9);
  CHECK(std::isfinite(r.translate_constant));
}

TEST_CASE("spectral gradient differentiates a sine exactly") {
  const Grid g(1, 16.0, 64);
  const double k = 2.0 * std::numbers::pi / 16.0 * 3;
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(k * g.point(i)[0]);
  const auto df = spectral_gradient(g, f, 0);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(df[i] == doctest::Approx(k * std::cos(k * g.point(i)[0])).epsilon(1e-10));
}

TEST_CASE("mass weights keep the total fixed across layers") {
  const Grid g(1, 16.0, 64);
  const MuKernel mu(g, 2.0);
  const auto u = make_band_limited(g, {{0.0, 0.0}, 1.0}, Profile::RandomPhase, 6);
  const auto mw = mass_weights(u, mu, 0.25, 6, {30, 1e-6});
  CHECK(mw.times.front() == doctest::Approx(-0.75));
  CHECK(mw.times.back() == doctest::Approx(0.5));
  CHECK(mw.expected_total == doctest::Approx(3.0 * mass(u)));
  CHECK(mw.max_drift <= 1e-6);
  CHECK(mw.layers.layer_count() == 6);
  CHECK(mw.layers.denominator() == (Numerator{1} << 30));
  CHECK_THROWS_AS(mass_weights(u, mu, 0.25, 5), PreconditionError);
}
