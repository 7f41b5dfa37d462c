#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace slt {

/// Bounded-degree digraph on a finite site set.
///
/// The usual instance is the periodic torus (Z/S)^d with the l-infinity unit
/// neighborhood H = {-1,0,1}^d, so every site has 3^d outgoing and 3^d
/// incoming neighbors including itself. Sites are numbered in row-major
/// order. Neighbor lists are sorted by site index, which fixes the edge order
/// used everywhere downstream.
class LatticeGraph {
 public:
  using AdjacencyRule = std::function<std::vector<int>(int site)>;

  static LatticeGraph torus(int dimension, int side);

  /// Generic digraph; coordinates and step offsets are unavailable.
  static LatticeGraph from_adjacency(std::size_t site_count,
                                     const AdjacencyRule& out_neighbors);

  bool is_torus() const { return dimension_ > 0; }
  int dimension() const { return dimension_; }
  int side() const { return side_; }
  std::size_t size() const { return out_.size(); }
  std::size_t edge_count() const;

  std::span<const int> out_neighbors(int site) const { return out_[site]; }
  std::span<const int> in_neighbors(int site) const { return in_[site]; }

  /// Position of `target` in out_neighbors(site), or -1.
  int out_slot(int site, int target) const;

  /// N+(A), sorted.
  std::vector<int> out_neighborhood(std::span<const int> sites) const;

  // Torus-only geometry.
  std::vector<int> coordinates(int site) const;
  int site_at(std::span<const int> coordinates) const;
  /// The H-offset h with site + h == target (mod S) for an edge site->target.
  std::vector<int> step_offset(int site, int target) const;

 private:
  LatticeGraph() = default;
  void build_in_lists();

  int dimension_ = 0;
  int side_ = 0;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

using GraphPtr = std::shared_ptr<const LatticeGraph>;

inline GraphPtr make_torus(int dimension, int side) {
  return std::make_shared<const LatticeGraph>(LatticeGraph::torus(dimension, side));
}

}  // namespace slt
