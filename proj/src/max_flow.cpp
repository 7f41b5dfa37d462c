#include "slt/max_flow.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <string>

#include "slt/errors.hpp"

namespace slt {

FlowNetwork::FlowNetwork(std::size_t node_count, std::size_t source, std::size_t sink)
    : node_count_(node_count), source_(source), sink_(sink) {
  if (source >= node_count || sink >= node_count || source == sink) {
    throw StructuralError("flow network needs distinct in-range source and sink");
  }
}

void FlowNetwork::set_capacity(std::size_t u, std::size_t v, Numerator capacity) {
  if (u >= node_count_ || v >= node_count_) {
    throw StructuralError("capacity endpoint out of range");
  }
  if (capacity < 0) throw StructuralError("negative capacity");
  if (u == v && capacity > 0) throw StructuralError("self-loop capacity in flow network");
  if (capacity > 0 && this->capacity(v, u) > 0) {
    throw StructuralError("capacity must be one-directional: c(" + std::to_string(v) + "," +
                          std::to_string(u) + ") > 0 already");
  }
  capacity_[{u, v}] = capacity;
}

Numerator FlowNetwork::capacity(std::size_t u, std::size_t v) const {
  auto it = capacity_.find({u, v});
  return it == capacity_.end() ? 0 : it->second;
}

Numerator FlowNetwork::cut_capacity(const std::vector<bool>& source_side) const {
  Numerator total = 0;
  for (const auto& [uv, c] : capacity_) {
    if (source_side[uv.first] && !source_side[uv.second]) total += c;
  }
  return total;
}

namespace {

struct Arc {
  std::size_t to;
  std::size_t reverse;
  Numerator residual;
  bool forward;
  NodePair key;
};

class Dinic {
 public:
  explicit Dinic(const FlowNetwork& net) : graph_(net.node_count()), level_(net.node_count()), next_(net.node_count()) {
    for (const auto& [uv, c] : net.capacities()) {
      auto [u, v] = uv;
      if (u == v) continue;
      graph_[u].push_back({v, graph_[v].size(), c, true, uv});
      graph_[v].push_back({u, graph_[u].size() - 1, 0, false, uv});
    }
  }

  Numerator run(std::size_t s, std::size_t t) {
    Numerator total = 0;
    while (bfs(s, t)) {
      std::fill(next_.begin(), next_.end(), 0);
      while (Numerator pushed = dfs(s, t, std::numeric_limits<Numerator>::max())) {
        total += pushed;
      }
    }
    return total;
  }

  std::vector<bool> reachable(std::size_t s) const {
    std::vector<bool> seen(graph_.size(), false);
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (const auto& a : graph_[u]) {
        if (a.residual > 0 && !seen[a.to]) {
          seen[a.to] = true;
          q.push(a.to);
        }
      }
    }
    return seen;
  }

  void collect(std::map<NodePair, Numerator>& flow) const {
    for (const auto& arcs : graph_) {
      for (const auto& a : arcs) {
        if (!a.forward) continue;
        // Reverse arc residual equals the flow pushed along this arc.
        flow[a.key] = graph_[a.to][a.reverse].residual;
      }
    }
  }

 private:
  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (const auto& a : graph_[u]) {
        if (a.residual > 0 && level_[a.to] < 0) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  Numerator dfs(std::size_t u, std::size_t t, Numerator limit) {
    if (u == t) return limit;
    for (auto& i = next_[u]; i < graph_[u].size(); ++i) {
      auto& a = graph_[u][i];
      if (a.residual <= 0 || level_[a.to] != level_[u] + 1) continue;
      Numerator pushed = dfs(a.to, t, std::min(limit, a.residual));
      if (pushed > 0) {
        a.residual -= pushed;
        graph_[a.to][a.reverse].residual += pushed;
        return pushed;
      }
    }
    return 0;
  }

  std::vector<std::vector<Arc>> graph_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

}  // namespace

MaxFlowResult max_flow(const FlowNetwork& network) {
  Dinic solver(network);
  MaxFlowResult result;
  result.value = solver.run(network.source(), network.sink());
  for (const auto& [uv, c] : network.capacities()) result.flow[uv] = 0;
  solver.collect(result.flow);
  result.source_side = solver.reachable(network.source());
  return result;
}

}  // namespace slt
