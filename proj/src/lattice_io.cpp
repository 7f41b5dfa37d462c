#include "slt/lattice_io.hpp"

#include <fstream>

#include "slt/errors.hpp"

namespace slt {

using nlohmann::json;

LatticeInstance lattice_instance_from_json(const json& doc) {
  for (const char* key : {"d", "S", "denominator", "layers"}) {
    if (!doc.contains(key)) throw StructuralError(std::string("lattice instance missing key '") + key + "'");
  }
  auto graph = make_torus(doc.at("d").get<int>(), doc.at("S").get<int>());
  auto layers = doc.at("layers").get<std::vector<std::vector<Numerator>>>();
  for (const auto& l : layers) {
    if (l.size() != graph->size()) {
      throw StructuralError("layer has " + std::to_string(l.size()) + " entries, expected " +
                            std::to_string(graph->size()));
    }
  }
  return {graph, WeightLayers(std::move(layers), doc.at("denominator").get<Numerator>())};
}

json lattice_instance_to_json(const LatticeGraph& g, const WeightLayers& w) {
  return {{"d", g.dimension()}, {"S", g.side()}, {"denominator", w.denominator()}, {"layers", w.layers()}};
}

LatticeInstance read_lattice_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open lattice instance " + path);
  return lattice_instance_from_json(json::parse(in));
}

json flows_to_json(const LayeredFlow& lf) {
  json triples = json::array();
  const auto& g = *lf.graph;
  for (std::size_t i = 0; i < lf.flows.size(); ++i) {
    for (std::size_t u = 0; u < g.size(); ++u) {
      auto nbrs = g.out_neighbors(static_cast<int>(u));
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const Numerator x = lf.flows[i].out[u][k];
        if (x > 0) triples.push_back({i, u, nbrs[k], x});
      }
    }
  }
  return {{"denominator", lf.layers.denominator()}, {"flows", std::move(triples)}};
}

LayeredFlow flows_from_json(const json& doc, GraphPtr graph, const WeightLayers& w) {
  std::vector<LayerFlow> flows(w.layer_count() - 1);
  for (auto& f : flows) {
    f.out.resize(graph->size());
    for (std::size_t u = 0; u < graph->size(); ++u) f.out[u].assign(graph->out_neighbors(static_cast<int>(u)).size(), 0);
  }
  for (const auto& t : doc.at("flows")) {
    const auto i = t.at(0).get<std::size_t>();
    const auto u = t.at(1).get<int>();
    const auto v = t.at(2).get<int>();
    const int slot = graph->out_slot(u, v);
    if (i >= flows.size() || slot < 0) throw StructuralError("flow triple does not name an edge");
    flows[i].out[u][slot] = t.at(3).get<Numerator>();
  }
  return {std::move(graph), w, std::move(flows), {}};
}

}  // namespace slt
