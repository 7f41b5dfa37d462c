#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slt {

using Coord = std::array<double, 2>;
using Complex = std::complex<double>;

/// Periodic grid of M^d points on [0, L)^d, d in {1, 2}, M a power of two >= 16.
class Grid {
 public:
  Grid(int dimension, double length, int points);

  int dimension() const { return dimension_; }
  double length() const { return length_; }
  int points() const { return points_; }
  double spacing() const { return length_ / points_; }
  double cell_volume() const;
  std::size_t size() const;
  /// pi M / L.
  double nyquist() const;

  /// Signed frequency index n in [-M/2, M/2) of array index j.
  int signed_index(int j) const { return j < points_ / 2 ? j : j - points_; }
  /// Array index of signed frequency n, or -1 when out of range.
  int array_index(long n) const;
  double wavenumber(int j) const;

  Coord point(std::size_t flat) const;
  Coord wavevector(std::size_t flat) const;
  std::array<int, 2> unflatten(std::size_t flat) const;
  std::size_t flatten(int j0, int j1) const;

  bool operator==(const Grid& other) const = default;

 private:
  int dimension_;
  double length_;
  int points_;
};

/// Ball B_radius(center) in frequency space.
struct FrequencyWindow {
  Coord center{0.0, 0.0};
  double radius = 1.0;
};

/// Throws ConfigurationError unless the window sits inside the band of `g`
/// and the Nyquist frequency exceeds twice its radius.
void check_resolvable(const Grid& g, const FrequencyWindow& w);

/// Complex samples of a band-limited solution at a given time.
class WaveField {
 public:
  WaveField(Grid grid, std::vector<Complex> values, FrequencyWindow window, double time);

  static WaveField zero(const Grid& grid, const FrequencyWindow& window);

  const Grid& grid() const { return grid_; }
  const std::vector<Complex>& values() const { return values_; }
  const FrequencyWindow& window() const { return window_; }
  double time() const { return time_; }

  /// Coefficients c with u(x) = sum_k c_k exp(i k.x).
  std::vector<Complex> spectrum() const;
  static WaveField from_spectrum(const Grid& grid, std::vector<Complex> coefficients,
                                 const FrequencyWindow& window, double time);

 private:
  Grid grid_;
  std::vector<Complex> values_;
  FrequencyWindow window_;
  double time_;
};

enum class Profile { Gaussian, RandomPhase, Bump };

Profile parse_profile(const std::string& name);
std::string to_string(Profile p);

/// Smooth taper: 1 for s <= 1 - width, 0 for s >= 1, C-infinity in between.
double window_rolloff(double s, double width = 0.1);

/// Unit-mass field with spectrum inside `window`. Gaussian and bump profiles
/// are centered at `position` (default: the middle of the box).
WaveField make_band_limited(const Grid& g, const FrequencyWindow& window, Profile profile,
                            std::uint64_t seed, std::optional<Coord> position = std::nullopt);

/// Exact free evolution by the multiplier exp(-i |k|^2 t).
WaveField propagate(const WaveField& u, double t);

enum class RescaleDirection { Forward, Inverse };

/// Galilean boost by xi plus parabolic rescaling by rho.
///
/// Forward maps a solution with window B_rho(xi) on [0,L)^d to
///   u'(x,t) = exp(-i(xi.x/rho + |xi|^2 t/rho^2)) u(x/rho + 2 t xi/rho^2, t/rho^2)
/// on [0, rho L)^d, whose window is B_1(0); the field time becomes rho^2 t.
/// Inverse undoes it. xi must be a multiple of 2 pi / L on every axis.
WaveField galilean_rescale(const WaveField& u, const Coord& xi, double rho, RescaleDirection direction);

/// h^d sum |u|^2.
double mass(const WaveField& u);
/// Mass computed from the spectral coefficients.
double spectral_mass(const WaveField& u);
std::vector<double> intensity(const WaveField& u);

/// Largest coefficient outside the window relative to the largest overall.
double spectral_leakage(const WaveField& u);

/// Raw interleaved little-endian doubles at `path` + ".bin" and a JSON
/// sidecar at `path` + ".json".
void write_snapshot(const WaveField& u, const std::string& path);
WaveField read_snapshot(const std::string& path);

}  // namespace slt
