#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slt/lattice_flow.hpp"
#include "slt/mu_kernel.hpp"
#include "slt/schrodinger.hpp"

namespace slt {

/// Spacetime tube {(x,t) : |x - gamma(t)| <= radius} around a polyline.
///
/// Vertices are unwrapped positions; membership uses the torus distance when
/// `period` > 0 and the Euclidean distance otherwise.
struct Tube {
  int dimension = 1;
  std::vector<double> times;
  std::vector<Coord> vertices;
  double radius = 0.0;
  double weight = 0.0;
  double period = 0.0;
  std::vector<int> sites;

  Coord position(double t) const;
  bool contains(const Coord& x, double t) const;
  /// max over segments of |delta vertex| / |delta time|.
  double max_speed() const;
};

/// Map from the lattice frame (x', t') of a decomposition to physical
/// coordinates: x = space_scale x' + drift t, t = time_scale t'.
struct TubeFrame {
  double space_scale = 1.0;
  double time_scale = 1.0;
  Coord drift{0.0, 0.0};
  /// Physical spatial period.
  double period = 0.0;
};

struct DecomposeOptions {
  int denominator_log2 = kDefaultDenominatorLog2;
  double drift_tolerance = 1e-6;
  bool allow_slack = true;
  double slack = 1e-6;
};

struct DecompositionMetadata {
  double tau = 0.0;
  double time_range = 0.0;
  int layers = 0;
  Numerator denominator = 0;
  double max_drift = 0.0;
  std::vector<std::size_t> slack_layers;
  std::vector<Numerator> quantization_residue;
  Coord xi{0.0, 0.0};
  double rho = 1.0;
  double kernel_dilation = 2.0;
};

/// Implicit weighted tube family f(x,t) = sum_p alpha(p) T_{gamma_p, r}.
///
/// Paths live on the kernel lattice; vertex i sits at lattice time
/// t_start + i tau. Edge masses come from the path ensemble's forward
/// marginals and are exact multiples of 1/denominator.
class TubeDecomposition {
 public:
  TubeDecomposition(PathEnsemble ensemble, WaveField field, double t_start, TubeFrame frame,
                    DecompositionMetadata metadata);

  const PathEnsemble& ensemble() const { return ensemble_; }
  const LatticeGraph& graph() const { return ensemble_.graph(); }
  /// The field that was decomposed, in the lattice frame.
  const WaveField& field() const { return field_; }
  const TubeFrame& frame() const { return frame_; }
  const DecompositionMetadata& metadata() const { return metadata_; }

  int dimension() const { return graph().dimension(); }
  double tau() const { return metadata_.tau; }
  std::size_t layer_count() const { return ensemble_.layer_count(); }
  double layer_time(std::size_t i) const { return t_start_ + static_cast<double>(i) * tau(); }
  /// 10 d in lattice units.
  double radius() const { return 10.0 * dimension(); }
  /// 3 sqrt(d) / tau in lattice units.
  double speed_limit() const;
  Numerator denominator() const { return ensemble_.layers().denominator(); }

  /// Z as a numerator over denominator().
  Numerator total_weight() const { return ensemble_.layers().layer_total(); }
  Numerator edge_mass(std::size_t layer, int site, std::size_t slot) const { return edge_mass_[layer][site][slot]; }
  Numerator node_mass(std::size_t layer, int site) const { return ensemble_.layers().at(layer, site); }

  /// Physical point to lattice frame.
  std::pair<Coord, double> to_lattice(const Coord& x, double t) const;
  Coord to_physical_position(const Coord& lattice_x, double lattice_t) const;
  double to_physical_time(double lattice_t) const { return frame_.time_scale * lattice_t; }

  /// f at a lattice-frame point as a numerator over denominator().
  Numerator cover_at_lattice(const Coord& x, double t) const;

  /// Same tubes viewed through another frame.
  TubeDecomposition reframed(const TubeFrame& frame, DecompositionMetadata metadata) const;

 private:
  PathEnsemble ensemble_;
  WaveField field_;
  double t_start_;
  TubeFrame frame_;
  DecompositionMetadata metadata_;
  std::vector<std::vector<std::vector<Numerator>>> edge_mass_;
};

/// Layers at 2 ceil(R/tau) + 2 times (n - N/2) tau so both ends of [-R, R]
/// are covered; mass weights, exact layered flow, Markov path ensemble.
TubeDecomposition decompose(const WaveField& u0, const MuKernel& mu, double tau, double time_range,
                            const DecomposeOptions& options = {});

/// Decomposition from ready-made layers on a torus (lattice frame = physical).
TubeDecomposition decompose_layers(const WaveField& field, GraphPtr graph, const WeightLayers& layers,
                                   double tau, double t_start, const DecomposeOptions& options = {});

struct SpaceTimePoint {
  Coord x{0.0, 0.0};
  double t = 0.0;
};

/// f(x,t) at physical points, exact numerators over dec.denominator().
std::vector<Numerator> evaluate_cover(const TubeDecomposition& dec, std::span<const SpaceTimePoint> points);

/// f at one physical time for many positions, sharing the active-edge scan.
std::vector<Numerator> evaluate_cover_slice(const TubeDecomposition& dec, double t, std::span<const Coord> xs);

/// One straight tube piece per positive edge mass of layer transition i, in
/// physical coordinates, with its mass numerator.
struct WeightedSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Coord x0{0.0, 0.0};
  Coord x1{0.0, 0.0};
  double radius = 0.0;
  Numerator mass = 0;
};
std::vector<WeightedSegment> weighted_segments(const TubeDecomposition& dec);

struct DominationOptions {
  double floor = 1e-10;
  /// Use every `space_stride`-th grid point per axis.
  int space_stride = 1;
};

struct DominationWitness {
  Coord x{0.0, 0.0};
  double t = 0.0;
  double intensity = 0.0;
  Numerator cover = 0;
  std::optional<Numerator> prism_bound;
};

struct DominationReport {
  bool passed = true;
  double constant = 0.0;
  std::size_t samples = 0;
  bool prism_bound_holds = true;
  std::vector<double> times;
  DominationWitness witness;
};

class DominationFailure : public std::runtime_error {
 public:
  DominationFailure(const std::string& what, DominationWitness witness)
      : std::runtime_error(what), witness_(std::move(witness)) {}
  const DominationWitness& witness() const { return witness_; }

 private:
  DominationWitness witness_;
};

/// Samples layer corners and centers inside [-R, R] on the field grid; throws
/// DominationFailure when f = 0 where |u_t|^2 exceeds floor * peak, or when
/// the prism lower bound f >= m(a, n tau) fails.
DominationReport verify_domination(const WaveField& u0, const TubeDecomposition& dec,
                                   const DominationOptions& options = {});

struct EfficiencyReport {
  /// (r space_scale)^d Z / mass.
  double constant = 0.0;
  double bound = 0.0;
  bool within_bound = true;
};

/// Exact comparison of (r space_scale)^d Z with (10d)^d 3^d (1 + 1e-6) mass(u0).
EfficiencyReport verify_efficiency(const TubeDecomposition& dec, const WaveField& u0);

/// Lattice side rho' L >= rho L that divides M into k >= 4 points per unit.
double admissible_scale(const Grid& grid, double rho);

/// Forward symmetry, decompose on a kernel rebuilt for the rescaled grid,
/// and a frame that maps tubes back: velocities within V rho' of 2 xi and
/// radius r / rho'.
TubeDecomposition scaled_decompose(const WaveField& u0, const Coord& xi, double rho, double tau,
                                   double time_range, double dilation = 2.0, const DecomposeOptions& options = {});

/// Explicit tubes for every path with weight >= threshold.
std::vector<Tube> materialize(const TubeDecomposition& dec, double threshold, std::size_t max_tubes = 100'000);

nlohmann::json decomposition_to_json(const TubeDecomposition& dec);
void write_tubes_csv(const std::vector<Tube>& tubes, std::ostream& out);

}  // namespace slt
