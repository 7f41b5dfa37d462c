#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "slt/exact.hpp"
#include "slt/lattice_graph.hpp"
#include "slt/max_flow.hpp"

namespace slt {

/// Nonnegative fixed-point mass per site for N >= 2 time layers.
///
/// All layers share one denominator and sum to the same total exactly.
class WeightLayers {
 public:
  WeightLayers(std::vector<std::vector<Numerator>> layers, Numerator denominator);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t site_count() const { return layers_.front().size(); }
  Numerator denominator() const { return denominator_; }
  Numerator layer_total() const { return total_; }

  const std::vector<Numerator>& layer(std::size_t i) const { return layers_[i]; }
  Numerator at(std::size_t i, int site) const { return layers_[i][site]; }
  const std::vector<std::vector<Numerator>>& layers() const { return layers_; }

 private:
  std::vector<std::vector<Numerator>> layers_;
  Numerator denominator_;
  Numerator total_;
};

struct QuantizationReport {
  Numerator target_total = 0;
  /// Per layer: units added (or removed) at `residue_site` after flooring.
  std::vector<Numerator> residue;
  std::vector<int> residue_site;
};

/// Rescales every layer to `target_total`, floors to 2^-denominator_log2 and
/// hands the rounding residue to the heaviest site of each layer.
WeightLayers quantize_layers(const std::vector<std::vector<double>>& layers, double target_total,
                             int denominator_log2 = kDefaultDenominatorLog2,
                             QuantizationReport* report = nullptr);

/// Node numbering used by build_flow_network: s, t, then V1, then V2.
struct LayerNetworkIndex {
  std::size_t site_count;
  static constexpr std::size_t source = 0;
  static constexpr std::size_t sink = 1;
  std::size_t first(int site) const { return 2 + static_cast<std::size_t>(site); }
  std::size_t second(int site) const { return 2 + site_count + static_cast<std::size_t>(site); }
};

FlowNetwork build_flow_network(const std::vector<Numerator>& w1, const std::vector<Numerator>& w2,
                               const LatticeGraph& g);

/// Flow between two consecutive layers, aligned with g.out_neighbors(u).
struct LayerFlow {
  std::vector<std::vector<Numerator>> out;

  std::vector<Numerator> out_marginal() const;
  std::vector<Numerator> in_marginal(const LatticeGraph& g) const;
};

struct FlowOptions {
  /// Permit inflating sink capacities by floor(w2 * slack) after an exact
  /// attempt fails. The realized in-marginal then replaces w2.
  bool allow_slack = false;
  double slack = 1e-6;
};

/// Local conservation failed: sum_A w_i > sum_{N+(A)} w_{i+1}.
class InfeasibleFlowError : public std::runtime_error {
 public:
  InfeasibleFlowError(std::size_t layer, std::vector<int> violating_set, Numerator lhs, Numerator rhs);

  std::size_t layer() const { return layer_; }
  const std::vector<int>& violating_set() const { return set_; }
  Numerator lhs() const { return lhs_; }
  Numerator rhs() const { return rhs_; }

 private:
  std::size_t layer_;
  std::vector<int> set_;
  Numerator lhs_;
  Numerator rhs_;
};

struct OneLayerResult {
  LayerFlow flow;
  std::vector<Numerator> in_marginal;
  bool used_slack = false;
};

OneLayerResult one_layer_flow(const std::vector<Numerator>& w1, const std::vector<Numerator>& w2,
                              const LatticeGraph& g, const FlowOptions& options = {});

/// Flows for every consecutive layer pair plus the layers they reproduce.
struct LayeredFlow {
  GraphPtr graph;
  WeightLayers layers;
  std::vector<LayerFlow> flows;
  std::vector<std::size_t> slack_layers;
};

LayeredFlow layered_decomposition(const WeightLayers& w, GraphPtr graph, const FlowOptions& options = {});

/// Markov chain on sites whose path law reproduces the layers.
class PathEnsemble {
 public:
  explicit PathEnsemble(LayeredFlow flow);

  const LayeredFlow& flow() const { return flow_; }
  const LatticeGraph& graph() const { return *flow_.graph; }
  const WeightLayers& layers() const { return flow_.layers; }
  std::size_t layer_count() const { return flow_.layers.layer_count(); }

  /// Z = sum of the first layer, in physical units.
  Rational normalizer() const;
  Rational initial(int site) const;
  /// P_i(u -> out_neighbors(u)[slot]); only defined where w_i(u) > 0.
  Rational kernel(std::size_t layer, int site, std::size_t slot) const;
  bool has_row(std::size_t layer, int site) const { return flow_.layers.at(layer, site) > 0; }

  /// Layer marginals of the chain scaled by Z (matrix push-forward).
  std::vector<std::vector<Rational>> push_forward() const;
  /// Mass carried by each edge (i, u, slot): forward marginal times kernel.
  std::vector<std::vector<std::vector<Rational>>> edge_marginals() const;

 private:
  LayeredFlow flow_;
};

PathEnsemble path_ensemble(const LayeredFlow& lf);

struct WeightedPath {
  std::vector<int> sites;
  Rational weight;
};

class PathExplosionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All paths with alpha(p) >= min_weight, depth-first in edge order.
std::vector<WeightedPath> enumerate_paths(const PathEnsemble& pe, const Rational& min_weight,
                                          std::size_t max_paths = 1'000'000);

enum class ConservationMode { CutFeasibility, BruteForce };

struct ConservationViolation {
  std::size_t layer = 0;
  std::vector<int> set;
  Numerator lhs = 0;
  Numerator rhs = 0;
};

struct ConservationReport {
  ConservationMode mode = ConservationMode::CutFeasibility;
  bool feasible = true;
  std::vector<bool> pair_feasible;
  std::size_t violation_count = 0;
  /// At most `kMaxListed` per layer pair in brute-force mode.
  std::vector<ConservationViolation> violations;
  static constexpr std::size_t kMaxListed = 16;
};

ConservationReport verify_local_conservation(const WeightLayers& w, const LatticeGraph& g,
                                             ConservationMode mode);

}  // namespace slt
