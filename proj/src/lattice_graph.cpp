#include "slt/lattice_graph.hpp"

#include <algorithm>
#include <string>

#include "slt/errors.hpp"

namespace slt {

LatticeGraph LatticeGraph::torus(int dimension, int side) {
  if (dimension < 1 || dimension > 2) {
    throw StructuralError("torus dimension must be 1 or 2, got " + std::to_string(dimension));
  }
  if (side < 3) {
    throw StructuralError("torus side must be at least 3, got " + std::to_string(side));
  }
  LatticeGraph g;
  g.dimension_ = dimension;
  g.side_ = side;
  std::size_t n = 1;
  for (int j = 0; j < dimension; ++j) n *= static_cast<std::size_t>(side);
  g.out_.resize(n);

  std::vector<int> c(dimension), shifted(dimension);
  for (std::size_t s = 0; s < n; ++s) {
    c = g.coordinates(static_cast<int>(s));
    auto& nbrs = g.out_[s];
    if (dimension == 1) {
      for (int h = -1; h <= 1; ++h) {
        shifted[0] = c[0] + h;
        nbrs.push_back(g.site_at(shifted));
      }
    } else {
      for (int h0 = -1; h0 <= 1; ++h0) {
        for (int h1 = -1; h1 <= 1; ++h1) {
          shifted[0] = c[0] + h0;
          shifted[1] = c[1] + h1;
          nbrs.push_back(g.site_at(shifted));
        }
      }
    }
    std::sort(nbrs.begin(), nbrs.end());
  }
  g.build_in_lists();
  return g;
}

LatticeGraph LatticeGraph::from_adjacency(std::size_t site_count,
                                          const AdjacencyRule& out_neighbors) {
  LatticeGraph g;
  g.out_.resize(site_count);
  for (std::size_t s = 0; s < site_count; ++s) {
    auto nbrs = out_neighbors(static_cast<int>(s));
    for (int v : nbrs) {
      if (v < 0 || static_cast<std::size_t>(v) >= site_count) {
        throw StructuralError("adjacency rule produced out-of-range site " + std::to_string(v));
      }
    }
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    g.out_[s] = std::move(nbrs);
  }
  g.build_in_lists();
  return g;
}

void LatticeGraph::build_in_lists() {
  in_.assign(out_.size(), {});
  for (std::size_t u = 0; u < out_.size(); ++u) {
    for (int v : out_[u]) in_[v].push_back(static_cast<int>(u));
  }
  for (auto& l : in_) std::sort(l.begin(), l.end());
}

std::size_t LatticeGraph::edge_count() const {
  std::size_t m = 0;
  for (const auto& l : out_) m += l.size();
  return m;
}

int LatticeGraph::out_slot(int site, int target) const {
  const auto& l = out_[site];
  auto it = std::lower_bound(l.begin(), l.end(), target);
  if (it == l.end() || *it != target) return -1;
  return static_cast<int>(it - l.begin());
}

std::vector<int> LatticeGraph::out_neighborhood(std::span<const int> sites) const {
  std::vector<char> mark(size(), 0);
  for (int a : sites) {
    for (int v : out_[a]) mark[v] = 1;
  }
  std::vector<int> result;
  for (std::size_t v = 0; v < mark.size(); ++v) {
    if (mark[v]) result.push_back(static_cast<int>(v));
  }
  return result;
}

std::vector<int> LatticeGraph::coordinates(int site) const {
  if (!is_torus()) throw StructuralError("coordinates requested on a non-torus graph");
  std::vector<int> c(dimension_);
  for (int j = dimension_ - 1; j >= 0; --j) {
    c[j] = site % side_;
    site /= side_;
  }
  return c;
}

int LatticeGraph::site_at(std::span<const int> coordinates) const {
  if (!is_torus()) throw StructuralError("site_at requested on a non-torus graph");
  int s = 0;
  for (int j = 0; j < dimension_; ++j) {
    int c = coordinates[j] % side_;
    if (c < 0) c += side_;
    s = s * side_ + c;
  }
  return s;
}

std::vector<int> LatticeGraph::step_offset(int site, int target) const {
  auto a = coordinates(site);
  auto b = coordinates(target);
  std::vector<int> h(dimension_);
  for (int j = 0; j < dimension_; ++j) {
    int diff = ((b[j] - a[j]) % side_ + side_) % side_;
    if (diff == 0) {
      h[j] = 0;
    } else if (diff == 1) {
      h[j] = 1;
    } else if (diff == side_ - 1) {
      h[j] = -1;
    } else {
      throw StructuralError("sites are not H-neighbors");
    }
  }
  return h;
}

}  // namespace slt
