#include "slt/mu_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "slt/errors.hpp"
#include "slt/fft.hpp"

namespace slt {

namespace {

double norm2(const Coord& v, int d) { return d == 1 ? v[0] * v[0] : v[0] * v[0] + v[1] * v[1]; }

/// Representative of x modulo `period` in [-period/2, period/2).
double wrap(double x, double period) {
  double r = std::fmod(x + 0.5 * period, period);
  if (r < 0.0) r += period;
  return r - 0.5 * period;
}

double torus_norm2(const Coord& x, int d, double period) {
  Coord w{wrap(x[0], period), d == 2 ? wrap(x[1], period) : 0.0};
  return norm2(w, d);
}

std::vector<double> real_part(const std::vector<Complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

double sum_over(const std::vector<double>& g, const std::vector<char>& member) {
  double s = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (member[a]) s += g[a];
  }
  return s;
}

}  // namespace

MuKernel::MuKernel(const Grid& grid, double dilation) : grid_(grid), dilation_(dilation) {
  if (!(dilation >= 1.0)) throw ConfigurationError("kernel dilation must be at least 1");
  const double length = grid.length();
  side_ = static_cast<int>(std::lround(length));
  if (std::abs(length - side_) > 1e-12 || side_ < 3) {
    throw ConfigurationError("kernel grid length must be an integer lattice side >= 3");
  }
  if (grid.points() % side_ != 0) throw ConfigurationError("grid points must be a multiple of the lattice side");
  subdivision_ = grid.points() / side_;
  if (subdivision_ < 4) throw ConfigurationError("grid must resolve the unit lattice with at least 4 points per unit");
  const int d = grid.dimension();
  cutoff_ = dilation_ * std::sqrt(std::pow(10.0, 3.6 / d) - 1.0);
  lattice_ = make_torus(d, side_);

  const int k = subdivision_;
  const double h = grid.spacing();
  const int cells = d == 1 ? k : k * k;
  unit_cell_normalizer_.resize(cells);
  for (int c = 0; c < cells; ++c) {
    const Coord x{(c % k) * h, d == 2 ? (c / k) * h : 0.0};
    unit_cell_normalizer_[c] = normalizer(x);
  }

  values_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto [j0, j1] = grid.unflatten(i);
    const int c = (j0 % k) + (d == 2 ? (j1 % k) * k : 0);
    values_[i] = periodized_profile(grid.point(i)) / unit_cell_normalizer_[c];
  }

  spectrum_.assign(values_.begin(), values_.end());
  fft_forward(spectrum_, d, grid.points());
}

std::size_t MuKernel::site_count() const { return lattice_->size(); }

double MuKernel::base_profile(const Coord& y) const {
  return std::pow(1.0 + norm2(y, dimension()), -5.0 * dimension());
}

double MuKernel::periodized_profile(const Coord& x) const {
  const int d = dimension();
  const double period = side_;
  const int reach = static_cast<int>(std::ceil(cutoff_ / period)) + 1;
  const Coord w{wrap(x[0], period), d == 2 ? wrap(x[1], period) : 0.0};
  double total = 0.0;
  for (int m0 = -reach; m0 <= reach; ++m0) {
    for (int m1 = (d == 2 ? -reach : 0); m1 <= (d == 2 ? reach : 0); ++m1) {
      const Coord y{w[0] - m0 * period, w[1] - m1 * period};
      if (std::sqrt(norm2(y, d)) > cutoff_) continue;
      total += base_profile({y[0] / dilation_, y[1] / dilation_});
    }
  }
  return total;
}

double MuKernel::normalizer(const Coord& x) const {
  const int d = dimension();
  const int reach = static_cast<int>(std::ceil(cutoff_)) + 1;
  const Coord f{x[0] - std::floor(x[0]), d == 2 ? x[1] - std::floor(x[1]) : 0.0};
  double total = 0.0;
  for (int a0 = -reach; a0 <= reach; ++a0) {
    for (int a1 = (d == 2 ? -reach : 0); a1 <= (d == 2 ? reach : 0); ++a1) {
      const Coord y{f[0] - a0, f[1] - a1};
      if (std::sqrt(norm2(y, d)) > cutoff_) continue;
      total += base_profile({y[0] / dilation_, y[1] / dilation_});
    }
  }
  return total;
}

double MuKernel::operator()(const Coord& x) const { return periodized_profile(x) / normalizer(x); }

std::size_t MuKernel::site_grid_index(int site) const {
  const auto c = lattice_->coordinates(site);
  return grid_.flatten(c[0] * subdivision_, dimension() == 2 ? c[1] * subdivision_ : 0);
}

std::vector<double> MuKernel::translate_sum(std::span<const int> sites) const {
  const int d = dimension();
  const int m = grid_.points();
  std::vector<double> out(grid_.size(), 0.0);
  for (int a : sites) {
    const auto c = lattice_->coordinates(a);
    const int s0 = c[0] * subdivision_;
    const int s1 = d == 2 ? c[1] * subdivision_ : 0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const auto [j0, j1] = grid_.unflatten(i);
      const int r0 = (j0 - s0 + m) % m;
      const int r1 = d == 2 ? (j1 - s1 + m) % m : 0;
      out[i] += values_[grid_.flatten(r0, r1)];
    }
  }
  return out;
}

std::vector<double> MuKernel::convolve(std::span<const double> f) const {
  if (f.size() != grid_.size()) throw StructuralError("convolve: grid function has the wrong size");
  std::vector<Complex> work(f.begin(), f.end());
  const int d = dimension();
  fft_forward(work, d, grid_.points());
  for (std::size_t i = 0; i < work.size(); ++i) work[i] *= spectrum_[i];
  fft_backward(work, d, grid_.points());
  const double scale = grid_.cell_volume() / static_cast<double>(grid_.size());
  auto out = real_part(work);
  for (double& x : out) x *= scale;
  return out;
}

std::vector<double> MuKernel::site_integrals(std::span<const double> f) const {
  const auto conv = convolve(f);
  std::vector<double> g(site_count());
  for (std::size_t a = 0; a < g.size(); ++a) g[a] = conv[site_grid_index(static_cast<int>(a))];
  return g;
}

MuKernel build_mu(const Grid& grid, double dilation) { return MuKernel(grid, dilation); }

double verify_lc(const WaveField& u0, const MuKernel& mu) {
  if (!(u0.grid() == mu.grid())) throw StructuralError("verify_lc: field and kernel grids differ");
  const Grid& g = u0.grid();
  const auto inten = intensity(u0);
  const double peak = *std::max_element(inten.begin(), inten.end());
  if (peak == 0.0) return 0.0;
  const auto avg = mu.convolve(inten);

  const int d = g.dimension();
  const int m = g.points();
  const double h = g.spacing();
  const int reach = static_cast<int>(std::floor(1.0 / h + 1e-9));
  std::vector<std::array<int, 2>> ball;
  for (int o0 = -reach; o0 <= reach; ++o0) {
    for (int o1 = (d == 2 ? -reach : 0); o1 <= (d == 2 ? reach : 0); ++o1) {
      if ((o0 * o0 + o1 * o1) * h * h <= 1.0 + 1e-12) ball.push_back({o0, o1});
    }
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto [j0, j1] = g.unflatten(i);
    double sup = 0.0;
    for (const auto& o : ball) {
      const int k0 = ((j0 + o[0]) % m + m) % m;
      const int k1 = d == 2 ? ((j1 + o[1]) % m + m) % m : 0;
      sup = std::max(sup, inten[g.flatten(k0, k1)]);
    }
    if (avg[i] <= 0.0) {
      if (sup > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, sup / avg[i]);
  }
  return worst;
}

std::vector<std::vector<int>> fs_test_sets(const MuKernel& mu, int random_subsets, std::uint64_t seed) {
  const auto& lat = *mu.lattice();
  const int d = mu.dimension();
  const int side = mu.lattice_side();
  const int n = static_cast<int>(lat.size());
  std::vector<std::vector<int>> sets;

  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  sets.push_back(all);
  sets.emplace_back();
  for (int a = 0; a < n; ++a) sets.push_back({a});

  auto slab = [&](int axis, int start, int width) {
    std::vector<int> s;
    for (int a = 0; a < n; ++a) {
      const int c = lat.coordinates(a)[axis];
      if (((c - start) % side + side) % side < width) s.push_back(a);
    }
    return s;
  };
  for (int axis = 0; axis < d; ++axis) {
    for (int width : {1, 2, side / 4, side / 2, side - 3}) {
      if (width >= 1) sets.push_back(slab(axis, 0, width));
    }
  }
  if (d == 2) {
    for (int w : {2, 3, side / 2}) {
      std::vector<int> box;
      for (int a = 0; a < n; ++a) {
        const auto c = lat.coordinates(a);
        if (c[0] < w && c[1] < w) box.push_back(a);
      }
      sets.push_back(std::move(box));
    }
  }

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (int r = 0; r < random_subsets; ++r) {
    std::vector<int> s;
    for (int a = 0; a < n; ++a) {
      if (coin(rng)) s.push_back(a);
    }
    sets.push_back(std::move(s));
  }

  std::uniform_int_distribution<int> pos(0, side - 1);
  std::uniform_int_distribution<int> len(1, std::max(1, side / 4));
  std::uniform_int_distribution<int> pieces(2, 3);
  for (int r = 0; r < 16; ++r) {
    std::vector<char> member(n, 0);
    const int count = pieces(rng);
    for (int p = 0; p < count; ++p) {
      const int axis = d == 2 ? static_cast<int>(rng() % 2) : 0;
      const int start = pos(rng);
      for (int a : slab(axis, start, len(rng))) member[a] = 1;
    }
    std::vector<int> s;
    for (int a = 0; a < n; ++a) {
      if (member[a]) s.push_back(a);
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

FsReport verify_fs(const WaveField& u0, const MuKernel& mu, double tau, const FsOptions& options) {
  if (!(u0.grid() == mu.grid())) throw StructuralError("verify_fs: field and kernel grids differ");
  if (!(tau > 0.0)) throw PreconditionError("verify_fs: tau must be positive");
  FsReport report;
  const double m0 = mass(u0);
  const auto sets = fs_test_sets(mu, options.random_subsets, options.seed);
  const auto& lat = *mu.lattice();
  const std::size_t n = lat.size();

  struct Prepared {
    std::vector<char> a;
    std::vector<char> grown;
    bool trivial;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(sets.size());
  for (const auto& s : sets) {
    Prepared p{std::vector<char>(n, 0), std::vector<char>(n, 0), false};
    for (int a : s) p.a[a] = 1;
    const auto grown = lat.out_neighborhood(s);
    for (int b : grown) p.grown[b] = 1;
    p.trivial = grown.empty() || grown.size() == n;
    prepared.push_back(std::move(p));
  }

  const auto g0 = mu.site_integrals(intensity(u0));
  bool any_margin = false;
  double worst = 0.0;
  for (int sign : {1, -1}) {
    for (int j = 1; j <= options.time_samples; ++j) {
      const double t = sign * tau * j / options.time_samples;
      const auto gt = mu.site_integrals(intensity(propagate(u0, t)));
      for (std::size_t si = 0; si < prepared.size(); ++si) {
        const auto& p = prepared[si];
        for (int direction = 0; direction < 2; ++direction) {
          const double lhs = sum_over(direction == 0 ? gt : g0, p.a);
          const double rhs = sum_over(direction == 0 ? g0 : gt, p.grown);
          ++report.checks;
          if (m0 == 0.0) continue;
          const double margin = (rhs - lhs) / m0;
          const bool ok = margin >= -options.roundoff;
          if (!ok && report.passed) {
            report.passed = false;
            report.witness = {sets[si], t, direction};
          }
          if (!p.trivial && (!any_margin || margin < worst)) {
            worst = margin;
            any_margin = true;
            if (report.passed) report.witness = {sets[si], t, direction};
          }
        }
      }
    }
  }
  report.worst_margin = worst;
  return report;
}

CalibrationResult calibrate_tau(std::span<const WaveField> ensemble, const MuKernel& mu,
                                const CalibrationOptions& options) {
  if (!(options.tau_max > 0.0)) throw PreconditionError("calibrate_tau: tau_max must be positive");
  CalibrationResult result;
  auto passes = [&](double tau, double* margin) {
    ++result.iterations;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& u : ensemble) {
      const auto r = verify_fs(u, mu, tau, options.fs);
      if (!r.passed) return false;
      worst = std::min(worst, r.worst_margin);
    }
    if (margin) *margin = std::isfinite(worst) ? worst : 0.0;
    return true;
  };

  double margin = 0.0;
  double lo = options.tau_max;
  double hi = 0.0;
  while (!passes(lo, &margin)) {
    hi = lo;
    lo *= 0.5;
    if (lo < options.tau_floor) {
      throw CalibrationError("no tau above " + std::to_string(options.tau_floor) +
                             " satisfies the finite-speed checks");
    }
  }
  if (hi > 0.0) {
    for (int step = 0; step < options.bisection_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      double m = 0.0;
      if (passes(mid, &m)) {
        lo = mid;
        margin = m;
      } else {
        hi = mid;
      }
    }
  }
  result.tau_passing = lo;
  result.tau = options.safety * lo;
  result.worst_margin = margin;
  return result;
}

std::vector<double> spectral_gradient(const Grid& g, std::span<const double> f, int axis) {
  if (f.size() != g.size()) throw StructuralError("spectral_gradient: grid function has the wrong size");
  if (axis < 0 || axis >= g.dimension()) throw StructuralError("spectral_gradient: axis out of range");
  std::vector<Complex> work(f.begin(), f.end());
  fft_forward(work, g.dimension(), g.points());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const auto j = g.unflatten(i)[axis];
    if (g.signed_index(j) == -g.points() / 2) {
      work[i] = 0.0;
      continue;
    }
    work[i] *= Complex(0.0, g.wavevector(i)[axis]);
  }
  fft_backward(work, g.dimension(), g.points());
  auto out = real_part(work);
  for (double& x : out) x /= static_cast<double>(g.size());
  return out;
}

KernelLemmaReport verify_kernel_lemmas(const MuKernel& mu, const std::vector<std::vector<int>>& sets,
                                       const std::vector<std::vector<double>>& kernels) {
  KernelLemmaReport report;
  const Grid& g = mu.grid();
  const int d = g.dimension();
  const auto& lat = *mu.lattice();
  const double period = g.length();

  for (auto s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    const auto mu_a = mu.translate_sum(s);
    const auto grown = lat.out_neighborhood(s);
    std::vector<int> boundary;
    std::set_difference(grown.begin(), grown.end(), s.begin(), s.end(), std::back_inserter(boundary));
    const auto mu_b = mu.translate_sum(boundary);
    for (int axis = 0; axis < d; ++axis) {
      const auto grad = spectral_gradient(g, mu_a, axis);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (boundary.empty()) {
          report.worst_gradient_residual = std::max(report.worst_gradient_residual, std::abs(grad[i]));
        } else {
          report.gradient_constant = std::max(report.gradient_constant, std::abs(grad[i]) / mu_b[i]);
        }
      }
    }
  }

  for (const auto& k : kernels) {
    if (k.size() != g.size()) throw StructuralError("verify_kernel_lemmas: kernel has the wrong size");
    double weight = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r2 = torus_norm2(g.point(i), d, period);
      weight += std::abs(k[i]) * (1.0 + std::pow(r2, 5.0 * d));
    }
    weight *= g.cell_volume();
    if (weight == 0.0) continue;
    for (const auto& s : sets) {
      if (s.empty()) continue;
      const auto mu_b = mu.translate_sum(s);
      std::vector<Complex> a(k.begin(), k.end());
      std::vector<Complex> b(mu_b.begin(), mu_b.end());
      fft_forward(a, d, g.points());
      fft_forward(b, d, g.points());
      for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
      fft_backward(a, d, g.points());
      const double scale = g.cell_volume() / static_cast<double>(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double conv = std::abs(a[i].real() * scale);
        report.convolution_constant = std::max(report.convolution_constant, conv / (weight * mu_b[i]));
      }
    }
  }

  const auto& values = mu.grid_values();
  const int m = g.points();
  const int stride = d == 1 ? 1 : std::max(1, m / 64);
  for (int x0 = 0; x0 < m; x0 += stride) {
    for (int x1 = 0; x1 < (d == 2 ? m : 1); x1 += stride) {
      const double mx = values[g.flatten(x0, x1)];
      for (int y0 = 0; y0 < m; y0 += stride) {
        for (int y1 = 0; y1 < (d == 2 ? m : 1); y1 += stride) {
          const double r2 = torus_norm2(g.point(g.flatten(y0, y1)), d, period);
          const double mxy = values[g.flatten((x0 - y0 + m) % m, d == 2 ? (x1 - y1 + m) % m : 0)];
          report.translate_constant =
              std::max(report.translate_constant, mxy / ((1.0 + std::pow(r2, 5.0 * d)) * mx));
        }
      }
    }
  }

  report.finite = std::isfinite(report.gradient_constant) && std::isfinite(report.convolution_constant) &&
                  std::isfinite(report.translate_constant);
  return report;
}

MassWeights mass_weights(const WaveField& u0, const MuKernel& mu, double tau, int layers,
                         const MassWeightOptions& options) {
  if (!(u0.grid() == mu.grid())) throw StructuralError("mass_weights: field and kernel grids differ");
  if (layers < 2 || layers % 2 != 0) throw PreconditionError("mass_weights: layer count must be even and >= 2");
  if (!(tau > 0.0)) throw PreconditionError("mass_weights: tau must be positive");
  const auto& lat = *mu.lattice();
  const double h_size = static_cast<double>(lat.out_neighbors(0).size());
  const double expected = h_size * mass(u0);

  std::vector<double> times;
  std::vector<std::vector<double>> raw;
  double drift = 0.0;
  for (int n = 0; n < layers; ++n) {
    const double t = (n - layers / 2) * tau;
    const auto g = mu.site_integrals(intensity(propagate(u0, t - u0.time())));
    std::vector<double> m(lat.size(), 0.0);
    for (std::size_t a = 0; a < lat.size(); ++a) {
      for (int b : lat.out_neighbors(static_cast<int>(a))) m[a] += g[b];
      m[a] = std::max(m[a], 0.0);
    }
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    if (expected > 0.0) drift = std::max(drift, std::abs(total - expected) / expected);
    times.push_back(t);
    raw.push_back(std::move(m));
  }
  if (drift > options.drift_tolerance) {
    throw NumericalIntegrityError("mass weight layer totals drift by " + std::to_string(drift) +
                                  " relative to |H| * mass");
  }
  QuantizationReport q;
  auto quantized = quantize_layers(raw, expected, options.denominator_log2, &q);
  return MassWeights{tau, std::move(times), std::move(raw), expected, drift, std::move(quantized), std::move(q)};
}

}  // namespace slt
