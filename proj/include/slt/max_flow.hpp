#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "slt/exact.hpp"

namespace slt {

using NodePair = std::pair<std::size_t, std::size_t>;

/// Source/sink network with exact nonnegative capacities on ordered pairs.
///
/// Capacities are one-directional: a positive c(u,v) forbids a positive
/// c(v,u). Explicit zero-capacity entries are kept so structural edges stay
/// visible.
class FlowNetwork {
 public:
  FlowNetwork(std::size_t node_count, std::size_t source, std::size_t sink);

  void set_capacity(std::size_t u, std::size_t v, Numerator capacity);
  Numerator capacity(std::size_t u, std::size_t v) const;

  std::size_t node_count() const { return node_count_; }
  std::size_t source() const { return source_; }
  std::size_t sink() const { return sink_; }

  /// Ordered by (u, v); this order drives augmenting-path tie-breaking.
  const std::map<NodePair, Numerator>& capacities() const { return capacity_; }

  /// Capacity of the cut whose source side is `source_side`.
  Numerator cut_capacity(const std::vector<bool>& source_side) const;

 private:
  std::size_t node_count_;
  std::size_t source_;
  std::size_t sink_;
  std::map<NodePair, Numerator> capacity_;
};

struct MaxFlowResult {
  Numerator value = 0;
  /// Flow on every entry of the capacity map (zeros included).
  std::map<NodePair, Numerator> flow;
  /// Residual reachability from the source; a minimum cut.
  std::vector<bool> source_side;
};

/// Exact maximum flow (Dinic's algorithm on integer capacities).
MaxFlowResult max_flow(const FlowNetwork& network);

}  // namespace slt
