#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slt/lattice_flow.hpp"
#include "slt/schrodinger.hpp"

namespace slt {

/// Partition-of-unity kernel mu(x) = mu'(x/R) / p(x) on a lattice torus.
///
/// mu'(y) = (1 + |y|^2)^(-5d) and p(x) = sum over a in Z^d of mu'((x-a)/R),
/// so the integer translates of mu sum to one everywhere. The grid must
/// subdivide the unit lattice: L is an integer S and M / S an integer k.
class MuKernel {
 public:
  MuKernel(const Grid& grid, double dilation);

  const Grid& grid() const { return grid_; }
  double dilation() const { return dilation_; }
  int dimension() const { return grid_.dimension(); }
  int lattice_side() const { return side_; }
  /// Grid points per lattice unit.
  int subdivision() const { return subdivision_; }
  std::size_t site_count() const;
  /// The H-neighborhood torus on the kernel's lattice.
  const GraphPtr& lattice() const { return lattice_; }

  /// mu'(y), the undilated base profile.
  double base_profile(const Coord& y) const;
  /// mu at an arbitrary point of the torus.
  double operator()(const Coord& x) const;
  /// mu_0 sampled on the grid (centered at site 0, torus-periodic).
  const std::vector<double>& grid_values() const { return values_; }

  /// mu_A = sum over a in A of mu_a, sampled on the grid.
  std::vector<double> translate_sum(std::span<const int> sites) const;
  /// g(a) = integral of f * mu_a for every lattice site a.
  std::vector<double> site_integrals(std::span<const double> f) const;
  /// (f * mu)(x) on the grid.
  std::vector<double> convolve(std::span<const double> f) const;

  /// Grid index of lattice site a.
  std::size_t site_grid_index(int site) const;

 private:
  double periodized_profile(const Coord& x) const;
  double normalizer(const Coord& x) const;

  Grid grid_;
  double dilation_;
  int side_;
  int subdivision_;
  double cutoff_;
  GraphPtr lattice_;
  std::vector<double> unit_cell_normalizer_;
  std::vector<double> values_;
  std::vector<Complex> spectrum_;
};

MuKernel build_mu(const Grid& grid, double dilation = 2.0);

/// max over grid x of sup_{|y-x|<=1} |u(y)|^2 / (|u|^2 * mu)(x); 0 for the zero field.
double verify_lc(const WaveField& u0, const MuKernel& mu);

struct FsWitness {
  std::vector<int> set;
  double time = 0.0;
  /// 0: forward inequality (evolved on the left), 1: reverse.
  int direction = 0;
};

struct FsReport {
  bool passed = true;
  /// min over checks of (rhs - lhs) / mass.
  double worst_margin = 0.0;
  std::size_t checks = 0;
  FsWitness witness;
};

struct FsOptions {
  int random_subsets = 200;
  int time_samples = 8;
  std::uint64_t seed = 1;
  /// Relative roundoff allowance applied to every check.
  double roundoff = 1e-12;
};

/// Tests both directions of the finite-speed inequality for t in (0, tau]
/// and t in [-tau, 0) on structured and random site sets.
FsReport verify_fs(const WaveField& u0, const MuKernel& mu, double tau, const FsOptions& options = {});

/// Deterministic test-set families: full, singletons, half-spaces, interval
/// unions and Bernoulli(1/2) subsets.
std::vector<std::vector<int>> fs_test_sets(const MuKernel& mu, int random_subsets, std::uint64_t seed);

struct CalibrationResult {
  double tau = 0.0;
  /// Largest tau found to pass before the safety factor.
  double tau_passing = 0.0;
  int iterations = 0;
  double worst_margin = 0.0;
};

struct CalibrationOptions {
  double tau_max = 1.0;
  double tau_floor = 1e-4;
  double safety = 0.5;
  int bisection_steps = 20;
  FsOptions fs;
};

CalibrationResult calibrate_tau(std::span<const WaveField> ensemble, const MuKernel& mu,
                                const CalibrationOptions& options = {});

struct KernelLemmaReport {
  /// max |d_j mu_A| / mu_{dA} over the supplied sets (0 when dA is empty).
  double gradient_constant = 0.0;
  double worst_gradient_residual = 0.0;
  /// max |K * mu_B| / ((integral |K|(1+|y|^{10d})) mu_B) over kernels and sets.
  double convolution_constant = 0.0;
  /// max mu(x-y) / ((1+|y|^{10d}) mu(x)) over the scanned pairs.
  double translate_constant = 0.0;
  bool finite = true;
};

KernelLemmaReport verify_kernel_lemmas(const MuKernel& mu, const std::vector<std::vector<int>>& sets,
                                       const std::vector<std::vector<double>>& kernels);

/// Spectral derivative of a real periodic grid function along `axis`.
std::vector<double> spectral_gradient(const Grid& g, std::span<const double> f, int axis);

struct MassWeights {
  double tau = 0.0;
  /// Absolute time (n - N/2) tau of layer n.
  std::vector<double> times;
  std::vector<std::vector<double>> raw;
  double expected_total = 0.0;
  double max_drift = 0.0;
  WeightLayers layers;
  QuantizationReport quantization;
};

struct MassWeightOptions {
  int denominator_log2 = kDefaultDenominatorLog2;
  double drift_tolerance = 1e-6;
};

/// m(a, n tau) = integral |u_{n tau}|^2 mu_{a+H} for n = -N/2 .. N/2-1.
MassWeights mass_weights(const WaveField& u0, const MuKernel& mu, double tau, int layers,
                         const MassWeightOptions& options = {});

}  // namespace slt
