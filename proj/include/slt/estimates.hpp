#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slt/intersection.hpp"
#include "slt/mu_kernel.hpp"
#include "slt/schrodinger.hpp"
#include "slt/tubes.hpp"

namespace slt {

/// Centers xi_i in A_1 = {1/2 <= |xi| <= 2} whose balls of radius 1/(10V)
/// cover A_1 and stay inside A*_1 = {1/4 <= |xi| <= 4}.
struct FrequencyCovering {
  int dimension = 1;
  double speed = 1.0;
  double radius = 0.1;
  std::vector<Coord> centers;

  /// Partition weights phi_i(xi) at unit-scale frequency xi (sum 1 on A_1).
  std::vector<double> weights(const Coord& xi) const;
};

/// Requires V >= 0.4 so the balls stay inside A*_1.
FrequencyCovering annulus_covering(int dimension, double speed);

struct CoveringCheck {
  bool covers = true;
  bool contained = true;
  bool partition_of_unity = true;
  /// max over sampled xi in A_1 of the distance to the nearest center.
  double max_gap = 0.0;
  double max_partition_error = 0.0;
  std::size_t samples = 0;
};

CoveringCheck check_covering(const FrequencyCovering& c, int samples_per_axis);

struct CoveringPiece {
  std::size_t index = 0;
  WaveField field;
};

/// u = sum of pieces with coefficients c_k phi_i(k / scale) and windows
/// B_{scale/(10V)}(scale xi_i); only nonzero pieces are returned.
std::vector<CoveringPiece> split_by_covering(const WaveField& u, const FrequencyCovering& c, double scale);

/// Throws PreconditionError unless the window lies inside {scale/2 <= |xi| <= 2 scale}.
void require_annulus(const FrequencyWindow& w, double scale, int dimension);

struct TimeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite 8-point Gauss-Legendre on [-R, R] with `panels` equal panels.
TimeQuadrature time_quadrature(double time_range, int panels);

struct BilinearOptions {
  int panels = 64;
};

struct BilinearResult {
  /// ||u_t v_t||_{L^2_{x,t}} over [-R, R].
  double norm = 0.0;
  /// M^{(d-1)/2} N^{-1/2} ||u_0|| ||v_0||.
  double scale = 0.0;
  double ratio = 0.0;
};

/// Needs M <= N/4 and windows inside A_N and A_M.
BilinearResult bilinear_ratio(const WaveField& u, const WaveField& v, double n_freq, double m_freq,
                              double time_range, const BilinearOptions& options = {});

struct TubeSideOptions {
  int panels = 64;
  double dilation = 2.0;
  /// Fixed tau for both rescaled fields; <= 0 calibrates each one.
  double tau = 0.0;
  CalibrationOptions calibration{};
  int max_halvings = 6;
};

struct TubeSideReport {
  double lhs_squared = 0.0;
  /// sum over edge pairs of w w' vol.
  double rhs = 0.0;
  double c_dom_u = 0.0;
  double c_dom_v = 0.0;
  bool dominated = true;
  bool sandwich = true;
  /// rhs / (N^{-1} M^{d-1} ||u||^2 ||v||^2).
  double bilinear_constant = 0.0;
  double tau_u = 0.0;
  double tau_v = 0.0;
  std::size_t segment_pairs = 0;
};

/// Decomposes u and v with scaled_decompose on their own windows and checks
/// LHS^2 <= C_dom(u) C_dom(v) sum w w' vol on one shared quadrature.
TubeSideReport bilinear_via_tubes(const WaveField& u, const WaveField& v, double n_freq, double m_freq,
                                  double time_range, const TubeSideOptions& options = {});

/// Decomposition with tau halved after each infeasible flow.
TubeDecomposition decompose_with_retry(const WaveField& u, double tau, double time_range, double dilation,
                                       int max_halvings, double* tau_used);

/// Exact sum over positive-mass segment pairs of m m' vol / (den den').
double tube_pair_sum(const TubeDecomposition& a, const TubeDecomposition& b, double t_lo, double t_hi,
                     std::size_t* pairs = nullptr);

struct TubeFamily {
  /// Core velocity c_i; spacetime direction (c_i, 1).
  Coord velocity{0.0, 0.0};
  std::vector<Tube> tubes;
};

struct KakeyaOptions {
  double voxel = 0.25;
  double delta = 0.1;
  double nu = 0.1;
};

struct KakeyaResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double wedge = 0.0;
};

/// |det| of the unit spacetime directions (c_i, 1) / |(c_i, 1)|.
double transversality(std::span<const TubeFamily> families, int dimension);

/// Integral over B_R of prod_i (sum_j w_ij T_ij)^{1/(n-1)} by voxel
/// quadrature, alongside prod_i (sum_j w_ij)^{1/(n-1)}.
KakeyaResult multilinear_overlap(std::span<const TubeFamily> families, int dimension, double ball_radius,
                                 const KakeyaOptions& options = {});

/// d + 1 families of unit-radius Lipschitz tubes over [-R, R] with offsets in
/// a disc of radius 4 and per-segment velocity perturbations below delta.
std::vector<TubeFamily> synthetic_families(int dimension, int tubes_per_family, double delta, double ball_radius,
                                           std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log y against log x.
SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace slt
