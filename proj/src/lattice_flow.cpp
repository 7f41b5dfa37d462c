#include "slt/lattice_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slt/errors.hpp"

namespace slt {

namespace {

Numerator sum_of(const std::vector<Numerator>& w) {
  return std::accumulate(w.begin(), w.end(), Numerator{0});
}

void check_site_count(const std::vector<Numerator>& w, const LatticeGraph& g, const char* what) {
  if (w.size() != g.size()) {
    throw StructuralError(std::string(what) + " has " + std::to_string(w.size()) +
                          " sites but the graph has " + std::to_string(g.size()));
  }
}

}  // namespace

WeightLayers::WeightLayers(std::vector<std::vector<Numerator>> layers, Numerator denominator)
    : layers_(std::move(layers)), denominator_(denominator), total_(0) {
  if (layers_.size() < 2) throw StructuralError("weight layers need N >= 2");
  if (denominator_ <= 0) throw StructuralError("denominator must be positive");
  const auto n = layers_.front().size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.size() != n) throw StructuralError("weight layers have differing site counts");
    for (Numerator x : l) {
      if (x < 0) throw StructuralError("negative weight in layer " + std::to_string(i));
    }
    const Numerator s = sum_of(l);
    if (i == 0) {
      total_ = s;
    } else if (s != total_) {
      throw StructuralError("global conservation fails: layer " + std::to_string(i) + " sums to " +
                            std::to_string(s) + ", layer 0 to " + std::to_string(total_));
    }
  }
}

WeightLayers quantize_layers(const std::vector<std::vector<double>>& layers, double target_total,
                             int denominator_log2, QuantizationReport* report) {
  if (denominator_log2 < 1 || denominator_log2 > 52) {
    throw ConfigurationError("denominator exponent must lie in [1, 52]");
  }
  const double denom = std::ldexp(1.0, denominator_log2);
  const auto target = static_cast<Numerator>(std::llround(target_total * denom));
  QuantizationReport local;
  local.target_total = target;

  std::vector<std::vector<Numerator>> q;
  q.reserve(layers.size());
  for (const auto& layer : layers) {
    std::vector<Numerator> row(layer.size(), 0);
    const double total = std::accumulate(layer.begin(), layer.end(), 0.0);
    if (target == 0 || total <= 0.0) {
      if (target != 0) throw NumericalIntegrityError("cannot rescale an empty layer to a positive total");
      local.residue.push_back(0);
      local.residue_site.push_back(-1);
      q.push_back(std::move(row));
      continue;
    }
    const double scale = static_cast<double>(target) / total;
    for (std::size_t a = 0; a < layer.size(); ++a) {
      if (layer[a] < 0.0) throw StructuralError("negative weight before quantization");
      row[a] = static_cast<Numerator>(std::floor(layer[a] * scale));
    }
    const Numerator residue = target - sum_of(row);
    const auto heaviest = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    row[heaviest] += residue;
    if (row[heaviest] < 0) throw NumericalIntegrityError("quantization residue exceeds heaviest site");
    local.residue.push_back(residue);
    local.residue_site.push_back(heaviest);
    q.push_back(std::move(row));
  }
  if (report) *report = std::move(local);
  return WeightLayers(std::move(q), static_cast<Numerator>(1) << denominator_log2);
}

FlowNetwork build_flow_network(const std::vector<Numerator>& w1, const std::vector<Numerator>& w2,
                               const LatticeGraph& g) {
  check_site_count(w1, g, "w1");
  check_site_count(w2, g, "w2");
  const LayerNetworkIndex idx{g.size()};
  FlowNetwork net(2 + 2 * g.size(), LayerNetworkIndex::source, LayerNetworkIndex::sink);
  for (std::size_t u = 0; u < g.size(); ++u) {
    const int site = static_cast<int>(u);
    if (w1[u] < 0 || w2[u] < 0) throw StructuralError("negative weight in flow network");
    net.set_capacity(LayerNetworkIndex::source, idx.first(site), w1[u]);
    for (int v : g.out_neighbors(site)) net.set_capacity(idx.first(site), idx.second(v), w1[u]);
    net.set_capacity(idx.second(site), LayerNetworkIndex::sink, w2[u]);
  }
  return net;
}

std::vector<Numerator> LayerFlow::out_marginal() const {
  std::vector<Numerator> m(out.size(), 0);
  for (std::size_t u = 0; u < out.size(); ++u) m[u] = sum_of(out[u]);
  return m;
}

std::vector<Numerator> LayerFlow::in_marginal(const LatticeGraph& g) const {
  std::vector<Numerator> m(out.size(), 0);
  for (std::size_t u = 0; u < out.size(); ++u) {
    auto nbrs = g.out_neighbors(static_cast<int>(u));
    for (std::size_t k = 0; k < nbrs.size(); ++k) m[nbrs[k]] += out[u][k];
  }
  return m;
}

InfeasibleFlowError::InfeasibleFlowError(std::size_t layer, std::vector<int> violating_set,
                                         Numerator lhs, Numerator rhs)
    : std::runtime_error("local conservation fails between layers " + std::to_string(layer) + " and " +
                         std::to_string(layer + 1) + ": |A| = " + std::to_string(violating_set.size()) +
                         ", sum_A w = " + std::to_string(lhs) + " > sum_{N+(A)} w' = " + std::to_string(rhs)),
      layer_(layer),
      set_(std::move(violating_set)),
      lhs_(lhs),
      rhs_(rhs) {}

namespace {

LayerFlow extract_layer_flow(const MaxFlowResult& mf, const LatticeGraph& g) {
  const LayerNetworkIndex idx{g.size()};
  LayerFlow lf;
  lf.out.resize(g.size());
  for (std::size_t u = 0; u < g.size(); ++u) {
    auto nbrs = g.out_neighbors(static_cast<int>(u));
    lf.out[u].resize(nbrs.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      lf.out[u][k] = mf.flow.at({idx.first(static_cast<int>(u)), idx.second(nbrs[k])});
    }
  }
  return lf;
}

// Sites of V1 on the source side whose whole out-neighborhood also is.
InfeasibleFlowError violation_from_cut(const MaxFlowResult& mf, const std::vector<Numerator>& w1,
                                       const std::vector<Numerator>& w2, const LatticeGraph& g) {
  const LayerNetworkIndex idx{g.size()};
  std::vector<int> a;
  for (std::size_t u = 0; u < g.size(); ++u) {
    const int site = static_cast<int>(u);
    if (!mf.source_side[idx.first(site)]) continue;
    auto nbrs = g.out_neighbors(site);
    const bool closed = std::all_of(nbrs.begin(), nbrs.end(),
                                    [&](int v) { return static_cast<bool>(mf.source_side[idx.second(v)]); });
    if (closed) a.push_back(site);
  }
  Numerator lhs = 0;
  for (int u : a) lhs += w1[u];
  Numerator rhs = 0;
  for (int v : g.out_neighborhood(a)) rhs += w2[v];
  return InfeasibleFlowError(0, std::move(a), lhs, rhs);
}

}  // namespace

OneLayerResult one_layer_flow(const std::vector<Numerator>& w1, const std::vector<Numerator>& w2,
                              const LatticeGraph& g, const FlowOptions& options) {
  check_site_count(w1, g, "w1");
  check_site_count(w2, g, "w2");
  const Numerator total = sum_of(w1);
  if (total != sum_of(w2)) throw StructuralError("one_layer_flow requires equal layer totals");

  const auto net = build_flow_network(w1, w2, g);
  const auto mf = max_flow(net);
  if (mf.value == total) {
    return {extract_layer_flow(mf, g), w2, false};
  }
  auto violation = violation_from_cut(mf, w1, w2, g);
  if (!options.allow_slack) throw violation;

  std::vector<Numerator> inflated(w2);
  for (auto& x : inflated) x += static_cast<Numerator>(std::floor(static_cast<double>(x) * options.slack));
  auto loose = net;
  const LayerNetworkIndex idx{g.size()};
  for (std::size_t v = 0; v < g.size(); ++v) {
    loose.set_capacity(idx.second(static_cast<int>(v)), LayerNetworkIndex::sink, inflated[v]);
  }
  const auto mf2 = max_flow(loose);
  if (mf2.value != total) throw violation;
  OneLayerResult r{extract_layer_flow(mf2, g), {}, true};
  r.in_marginal = r.flow.in_marginal(g);
  return r;
}

LayeredFlow layered_decomposition(const WeightLayers& w, GraphPtr graph, const FlowOptions& options) {
  if (!graph) throw StructuralError("layered_decomposition needs a graph");
  if (w.site_count() != graph->size()) throw StructuralError("weight layers and graph disagree on site count");

  auto effective = w.layers();
  std::vector<LayerFlow> flows;
  std::vector<std::size_t> slack_layers;
  for (std::size_t i = 0; i + 1 < effective.size(); ++i) {
    try {
      auto r = one_layer_flow(effective[i], effective[i + 1], *graph, options);
      if (r.used_slack) {
        slack_layers.push_back(i);
        effective[i + 1] = r.in_marginal;
      }
      flows.push_back(std::move(r.flow));
    } catch (const InfeasibleFlowError& e) {
      throw InfeasibleFlowError(i, e.violating_set(), e.lhs(), e.rhs());
    }
  }
  return {std::move(graph), WeightLayers(std::move(effective), w.denominator()), std::move(flows),
          std::move(slack_layers)};
}

PathEnsemble::PathEnsemble(LayeredFlow flow) : flow_(std::move(flow)) {
  const auto& g = *flow_.graph;
  if (flow_.flows.size() + 1 != flow_.layers.layer_count()) {
    throw StructuralError("layered flow must have one flow per consecutive layer pair");
  }
  for (std::size_t i = 0; i < flow_.flows.size(); ++i) {
    const auto& f = flow_.flows[i];
    for (std::size_t u = 0; u < g.size(); ++u) {
      for (Numerator x : f.out[u]) {
        if (x < 0 || x > flow_.layers.at(i, static_cast<int>(u))) {
          throw StructuralError("flow entry outside [0, w_i(u)] at layer " + std::to_string(i));
        }
      }
    }
    if (f.out_marginal() != flow_.layers.layer(i) || f.in_marginal(g) != flow_.layers.layer(i + 1)) {
      throw StructuralError("flow marginals do not match layers at layer " + std::to_string(i));
    }
  }
}

Rational PathEnsemble::normalizer() const {
  return fixed_to_rational(flow_.layers.layer_total(), flow_.layers.denominator());
}

Rational PathEnsemble::initial(int site) const {
  return Rational(flow_.layers.at(0, site)) / Rational(flow_.layers.layer_total());
}

Rational PathEnsemble::kernel(std::size_t layer, int site, std::size_t slot) const {
  const Numerator w = flow_.layers.at(layer, site);
  if (w == 0) throw PreconditionError("kernel row undefined where the layer weight vanishes");
  return Rational(flow_.flows[layer].out[site][slot]) / Rational(w);
}

std::vector<std::vector<Rational>> PathEnsemble::push_forward() const {
  const auto& g = graph();
  const Rational z = normalizer();
  std::vector<std::vector<Rational>> marg(layer_count(), std::vector<Rational>(g.size()));
  for (std::size_t u = 0; u < g.size(); ++u) marg[0][u] = z * initial(static_cast<int>(u));
  for (std::size_t i = 0; i + 1 < layer_count(); ++i) {
    for (std::size_t u = 0; u < g.size(); ++u) {
      const int site = static_cast<int>(u);
      if (!has_row(i, site)) continue;
      auto nbrs = g.out_neighbors(site);
      for (std::size_t k = 0; k < nbrs.size(); ++k) marg[i + 1][nbrs[k]] += marg[i][u] * kernel(i, site, k);
    }
  }
  return marg;
}

std::vector<std::vector<std::vector<Rational>>> PathEnsemble::edge_marginals() const {
  const auto& g = graph();
  const auto marg = push_forward();
  std::vector<std::vector<std::vector<Rational>>> e(layer_count() - 1);
  for (std::size_t i = 0; i + 1 < layer_count(); ++i) {
    e[i].resize(g.size());
    for (std::size_t u = 0; u < g.size(); ++u) {
      const int site = static_cast<int>(u);
      const auto deg = g.out_neighbors(site).size();
      e[i][u].assign(deg, Rational(0));
      if (!has_row(i, site)) continue;
      for (std::size_t k = 0; k < deg; ++k) e[i][u][k] = marg[i][u] * kernel(i, site, k);
    }
  }
  return e;
}

PathEnsemble path_ensemble(const LayeredFlow& lf) { return PathEnsemble(lf); }

namespace {

struct PathWalker {
  const PathEnsemble& pe;
  const Rational& min_weight;
  std::size_t max_paths;
  std::vector<WeightedPath>& out;
  std::vector<int> prefix;

  void walk(std::size_t layer, const Rational& weight) {
    if (layer + 1 == pe.layer_count()) {
      if (out.size() >= max_paths) {
        throw PathExplosionError("path enumeration exceeded cap of " + std::to_string(max_paths));
      }
      out.push_back({prefix, weight});
      return;
    }
    const int u = prefix.back();
    auto nbrs = pe.graph().out_neighbors(u);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (pe.flow().flows[layer].out[u][k] == 0) continue;
      Rational next = weight * pe.kernel(layer, u, k);
      if (next < min_weight) continue;
      prefix.push_back(nbrs[k]);
      walk(layer + 1, next);
      prefix.pop_back();
    }
  }
};

}  // namespace

std::vector<WeightedPath> enumerate_paths(const PathEnsemble& pe, const Rational& min_weight,
                                          std::size_t max_paths) {
  std::vector<WeightedPath> out;
  PathWalker walker{pe, min_weight, max_paths, out, {}};
  const Rational z = pe.normalizer();
  for (std::size_t u = 0; u < pe.graph().size(); ++u) {
    const int site = static_cast<int>(u);
    if (!pe.has_row(0, site)) continue;
    Rational w = z * pe.initial(site);
    if (w < min_weight) continue;
    walker.prefix = {site};
    walker.walk(0, w);
  }
  return out;
}

ConservationReport verify_local_conservation(const WeightLayers& w, const LatticeGraph& g,
                                             ConservationMode mode) {
  if (w.site_count() != g.size()) throw StructuralError("weight layers and graph disagree on site count");
  ConservationReport report;
  report.mode = mode;
  const std::size_t n = g.size();

  if (mode == ConservationMode::CutFeasibility) {
    for (std::size_t i = 0; i + 1 < w.layer_count(); ++i) {
      bool ok = true;
      try {
        one_layer_flow(w.layer(i), w.layer(i + 1), g);
      } catch (const InfeasibleFlowError& e) {
        ok = false;
        report.violations.push_back({i, e.violating_set(), e.lhs(), e.rhs()});
        ++report.violation_count;
      }
      report.pair_feasible.push_back(ok);
      report.feasible = report.feasible && ok;
    }
    return report;
  }

  if (n > 20) throw PreconditionError("brute-force conservation check supports at most 20 sites");
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<std::uint32_t> nbr_mask_of_site(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (int v : g.out_neighbors(static_cast<int>(u))) nbr_mask_of_site[u] |= (1u << v);
  }
  std::vector<Numerator> sum_a(subsets), sum_next(subsets);
  std::vector<std::uint32_t> nbr(subsets);
  for (std::size_t i = 0; i + 1 < w.layer_count(); ++i) {
    const auto& cur = w.layer(i);
    const auto& next = w.layer(i + 1);
    sum_a[0] = sum_next[0] = 0;
    nbr[0] = 0;
    std::size_t count = 0;
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      const auto low = static_cast<std::size_t>(__builtin_ctzll(mask));
      const std::size_t rest = mask & (mask - 1);
      sum_a[mask] = sum_a[rest] + cur[low];
      sum_next[mask] = sum_next[rest] + next[low];
      nbr[mask] = nbr[rest] | nbr_mask_of_site[low];
    }
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      const Numerator rhs = sum_next[nbr[mask]];
      if (sum_a[mask] <= rhs) continue;
      ++count;
      if (count <= ConservationReport::kMaxListed) {
        ConservationViolation v{i, {}, sum_a[mask], rhs};
        for (std::size_t s = 0; s < n; ++s) {
          if (mask & (std::size_t{1} << s)) v.set.push_back(static_cast<int>(s));
        }
        report.violations.push_back(std::move(v));
      }
    }
    report.violation_count += count;
    report.pair_feasible.push_back(count == 0);
    report.feasible = report.feasible && count == 0;
  }
  return report;
}

}  // namespace slt
