#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "slt/lattice_flow.hpp"

namespace slt {

/// Graph + weights as {d, S, denominator, layers}, sites row-major.
struct LatticeInstance {
  GraphPtr graph;
  WeightLayers weights;
};

LatticeInstance lattice_instance_from_json(const nlohmann::json& doc);
nlohmann::json lattice_instance_to_json(const LatticeGraph& g, const WeightLayers& w);

LatticeInstance read_lattice_instance(const std::string& path);

/// Sparse (i, u, v, numerator) triples for every positive flow entry.
nlohmann::json flows_to_json(const LayeredFlow& lf);
LayeredFlow flows_from_json(const nlohmann::json& doc, GraphPtr graph, const WeightLayers& w);

}  // namespace slt
