#include "slt/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "slt/errors.hpp"
#include "slt/fft.hpp"

namespace slt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDroppedCoefficientTolerance = 1e-12;

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

double norm2(const Coord& v, int d) { return d == 1 ? v[0] * v[0] : v[0] * v[0] + v[1] * v[1]; }

}  // namespace

Grid::Grid(int dimension, double length, int points)
    : dimension_(dimension), length_(length), points_(points) {
  if (dimension < 1 || dimension > 2) throw ConfigurationError("grid dimension must be 1 or 2");
  if (!(length > 0.0)) throw ConfigurationError("grid length must be positive");
  if (points < 16 || !is_power_of_two(points)) {
    throw ConfigurationError("grid points per axis must be a power of two >= 16, got " + std::to_string(points));
  }
}

double Grid::cell_volume() const { return std::pow(spacing(), dimension_); }

std::size_t Grid::size() const {
  return dimension_ == 1 ? static_cast<std::size_t>(points_) : static_cast<std::size_t>(points_) * points_;
}

double Grid::nyquist() const { return std::numbers::pi * points_ / length_; }

int Grid::array_index(long n) const {
  if (n < -points_ / 2 || n >= points_ / 2) return -1;
  return n >= 0 ? static_cast<int>(n) : static_cast<int>(n + points_);
}

double Grid::wavenumber(int j) const { return kTwoPi * signed_index(j) / length_; }

std::array<int, 2> Grid::unflatten(std::size_t flat) const {
  if (dimension_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / points_), static_cast<int>(flat % points_)};
}

std::size_t Grid::flatten(int j0, int j1) const {
  return dimension_ == 1 ? static_cast<std::size_t>(j0) : static_cast<std::size_t>(j0) * points_ + j1;
}

Coord Grid::point(std::size_t flat) const {
  auto [j0, j1] = unflatten(flat);
  return {j0 * spacing(), dimension_ == 2 ? j1 * spacing() : 0.0};
}

Coord Grid::wavevector(std::size_t flat) const {
  auto [j0, j1] = unflatten(flat);
  return {wavenumber(j0), dimension_ == 2 ? wavenumber(j1) : 0.0};
}

void check_resolvable(const Grid& g, const FrequencyWindow& w) {
  if (!(w.radius > 0.0)) throw ConfigurationError("frequency window radius must be positive");
  if (!(g.nyquist() > 2.0 * w.radius)) {
    throw ConfigurationError("Nyquist frequency " + std::to_string(g.nyquist()) +
                             " does not exceed twice the window radius " + std::to_string(w.radius));
  }
  for (int j = 0; j < g.dimension(); ++j) {
    if (!(std::abs(w.center[j]) + w.radius < g.nyquist())) {
      throw ConfigurationError("frequency window exceeds the resolvable band on axis " + std::to_string(j));
    }
  }
}

WaveField::WaveField(Grid grid, std::vector<Complex> values, FrequencyWindow window, double time)
    : grid_(grid), values_(std::move(values)), window_(window), time_(time) {
  if (values_.size() != grid_.size()) throw StructuralError("wave field size does not match its grid");
}

WaveField WaveField::zero(const Grid& grid, const FrequencyWindow& window) {
  return WaveField(grid, std::vector<Complex>(grid.size()), window, 0.0);
}

std::vector<Complex> WaveField::spectrum() const {
  std::vector<Complex> c(values_);
  fft_forward(c, grid_.dimension(), grid_.points());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& x : c) x *= scale;
  return c;
}

WaveField WaveField::from_spectrum(const Grid& grid, std::vector<Complex> coefficients,
                                   const FrequencyWindow& window, double time) {
  if (coefficients.size() != grid.size()) throw StructuralError("spectrum size does not match grid");
  fft_backward(coefficients, grid.dimension(), grid.points());
  return WaveField(grid, std::move(coefficients), window, time);
}

Profile parse_profile(const std::string& name) {
  if (name == "gaussian") return Profile::Gaussian;
  if (name == "random-phase") return Profile::RandomPhase;
  if (name == "bump") return Profile::Bump;
  throw ConfigurationError("unknown profile '" + name + "' (expected gaussian | random-phase | bump)");
}

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Gaussian:
      return "gaussian";
    case Profile::RandomPhase:
      return "random-phase";
    case Profile::Bump:
      return "bump";
  }
  return "unknown";
}

double window_rolloff(double s, double width) {
  if (s <= 1.0 - width) return 1.0;
  if (s >= 1.0) return 0.0;
  const double y = (s - (1.0 - width)) / width;
  auto psi = [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; };
  const double a = psi(1.0 - y);
  return a / (a + psi(y));
}

WaveField make_band_limited(const Grid& g, const FrequencyWindow& window, Profile profile,
                            std::uint64_t seed, std::optional<Coord> position) {
  check_resolvable(g, window);
  const int d = g.dimension();
  const Coord x0 = position.value_or(Coord{g.length() / 2, d == 2 ? g.length() / 2 : 0.0});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Complex> c(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord k = g.wavevector(i);
    const Coord dk{k[0] - window.center[0], k[1] - window.center[1]};
    const double s = std::sqrt(norm2(dk, d)) / window.radius;
    if (s >= 1.0) continue;
    const double phase = -(k[0] * x0[0] + k[1] * x0[1]);
    switch (profile) {
      case Profile::Gaussian:
        c[i] = std::polar(std::exp(-4.5 * s * s) * window_rolloff(s), phase);
        break;
      case Profile::Bump:
        c[i] = std::polar(std::exp(1.0 - 1.0 / (1.0 - s * s)), phase);
        break;
      case Profile::RandomPhase: {
        const double re = normal(rng);
        const double im = normal(rng);
        c[i] = window_rolloff(s) * Complex(re, im);
        break;
      }
    }
  }
  auto u = WaveField::from_spectrum(g, std::move(c), window, 0.0);
  const double m = mass(u);
  if (!(m > 0.0)) throw ConfigurationError("frequency window contains no grid frequencies");
  std::vector<Complex> v(u.values());
  const double scale = 1.0 / std::sqrt(m);
  for (auto& x : v) x *= scale;
  return WaveField(g, std::move(v), window, 0.0);
}

WaveField propagate(const WaveField& u, double t) {
  if (t == 0.0) return u;
  const Grid& g = u.grid();
  const int d = g.dimension();
  auto c = u.spectrum();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (c[i] == Complex(0.0, 0.0)) continue;
    c[i] *= std::polar(1.0, -norm2(g.wavevector(i), d) * t);
  }
  return WaveField::from_spectrum(g, std::move(c), u.window(), u.time() + t);
}

namespace {

long lattice_index(double xi, double length) {
  const double n = xi * length / kTwoPi;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, std::abs(n))) {
    throw ConfigurationError("boost " + std::to_string(xi) + " is not a multiple of 2 pi / L");
  }
  return static_cast<long>(r);
}

}  // namespace

WaveField galilean_rescale(const WaveField& u, const Coord& xi, double rho, RescaleDirection direction) {
  if (!(rho > 0.0)) throw ConfigurationError("rescale factor must be positive");
  const int d = u.grid().dimension();
  const bool identity = rho == 1.0 && xi[0] == 0.0 && (d == 1 || xi[1] == 0.0);
  if (identity) return u;

  const bool forward = direction == RescaleDirection::Forward;
  const Grid& src = u.grid();
  const Grid dst(d, forward ? src.length() * rho : src.length() / rho, src.points());
  // Original-frame geometry: L and t as seen by the unscaled solution.
  const double length = forward ? src.length() : dst.length();
  const double time = forward ? u.time() : u.time() / (rho * rho);
  const std::array<long, 2> shift{lattice_index(xi[0], length), d == 2 ? lattice_index(xi[1], length) : 0};
  const double xi2 = norm2(xi, d);

  FrequencyWindow win = u.window();
  if (forward) {
    win.center = {(win.center[0] - xi[0]) / rho, (win.center[1] - xi[1]) / rho};
    win.radius /= rho;
  } else {
    win.center = {win.center[0] * rho + xi[0], win.center[1] * rho + xi[1]};
    win.radius *= rho;
  }

  const auto c = u.spectrum();
  double peak = 0.0;
  for (const auto& x : c) peak = std::max(peak, std::abs(x));
  std::vector<Complex> out(dst.size());
  double dropped = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (c[i] == Complex(0.0, 0.0)) continue;
    auto [j0, j1] = src.unflatten(i);
    const long n0 = src.signed_index(j0);
    const long n1 = d == 2 ? src.signed_index(j1) : 0;
    // Forward sends original index n to n - n_xi; inverse sends n' to n' + n_xi.
    const long m0 = forward ? n0 - shift[0] : n0 + shift[0];
    const long m1 = forward ? n1 - shift[1] : n1 + shift[1];
    const int a0 = dst.array_index(m0);
    const int a1 = d == 2 ? dst.array_index(m1) : 0;
    if (a0 < 0 || a1 < 0) {
      dropped = std::max(dropped, std::abs(c[i]));
      continue;
    }
    // Original wavevector k of this mode.
    const long k0 = forward ? n0 : m0;
    const long k1 = forward ? n1 : m1;
    const double kx = kTwoPi * k0 / length;
    const double ky = kTwoPi * k1 / length;
    const double phase = (2.0 * (kx * xi[0] + ky * xi[1]) - xi2) * time;
    out[dst.flatten(a0, a1)] = c[i] * std::polar(1.0, forward ? phase : -phase);
  }
  if (peak > 0.0 && dropped > kDroppedCoefficientTolerance * peak) {
    throw NumericalIntegrityError("rescaled spectrum leaves the target grid's band (relative loss " +
                                  std::to_string(dropped / peak) + ")");
  }
  const double new_time = forward ? u.time() * rho * rho : u.time() / (rho * rho);
  return WaveField::from_spectrum(dst, std::move(out), win, new_time);
}

double mass(const WaveField& u) {
  double s = 0.0;
  for (const auto& x : u.values()) s += std::norm(x);
  return s * u.grid().cell_volume();
}

double spectral_mass(const WaveField& u) {
  double s = 0.0;
  for (const auto& x : u.spectrum()) s += std::norm(x);
  return s * std::pow(u.grid().length(), u.grid().dimension());
}

std::vector<double> intensity(const WaveField& u) {
  std::vector<double> out(u.values().size());
  std::transform(u.values().begin(), u.values().end(), out.begin(), [](const Complex& x) { return std::norm(x); });
  return out;
}

double spectral_leakage(const WaveField& u) {
  const auto c = u.spectrum();
  const Grid& g = u.grid();
  const auto& w = u.window();
  double peak = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::abs(c[i]);
    peak = std::max(peak, a);
    const Coord k = g.wavevector(i);
    const Coord dk{k[0] - w.center[0], k[1] - w.center[1]};
    if (std::sqrt(norm2(dk, g.dimension())) > w.radius) outside = std::max(outside, a);
  }
  return peak > 0.0 ? outside / peak : 0.0;
}

void write_snapshot(const WaveField& u, const std::string& path) {
  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw StructuralError("cannot write snapshot " + path + ".bin");
  bin.write(reinterpret_cast<const char*>(u.values().data()),
            static_cast<std::streamsize>(u.values().size() * sizeof(Complex)));
  const auto& g = u.grid();
  nlohmann::json meta = {
      {"dimension", g.dimension()},
      {"length", g.length()},
      {"points", g.points()},
      {"time", u.time()},
      {"window", {{"center", {u.window().center[0], u.window().center[1]}}, {"radius", u.window().radius}}},
      {"layout", "row-major complex128 interleaved little-endian"},
  };
  std::ofstream(path + ".json") << meta.dump(2) << '\n';
}

WaveField read_snapshot(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw StructuralError("cannot read snapshot sidecar " + path + ".json");
  const auto meta = nlohmann::json::parse(js);
  const Grid g(meta.at("dimension").get<int>(), meta.at("length").get<double>(), meta.at("points").get<int>());
  FrequencyWindow w;
  const auto center = meta.at("window").at("center").get<std::vector<double>>();
  w.center = {center.at(0), center.at(1)};
  w.radius = meta.at("window").at("radius").get<double>();
  std::vector<Complex> values(g.size());
  std::ifstream bin(path + ".bin", std::ios::binary);
  bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(Complex)));
  if (!bin) throw StructuralError("snapshot payload " + path + ".bin is truncated");
  return WaveField(g, std::move(values), w, meta.at("time").get<double>());
}

}  // namespace slt
