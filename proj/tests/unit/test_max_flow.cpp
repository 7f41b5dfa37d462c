#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "slt/max_flow.hpp"

using namespace slt;

TEST_CASE("textbook network") {
  FlowNetwork net(6, 0, 5);
  net.set_capacity(0, 1, 16);
  net.set_capacity(0, 2, 13);
  net.set_capacity(2, 1, 4);
  net.set_capacity(1, 3, 12);
  net.set_capacity(3, 2, 9);
  net.set_capacity(2, 4, 14);
  net.set_capacity(4, 3, 7);
  net.set_capacity(3, 5, 20);
  net.set_capacity(4, 5, 4);
  const auto r = max_flow(net);
  CHECK(r.value == 23);
  CHECK(net.cut_capacity(r.source_side) == 23);
}

TEST_CASE("flows respect capacities and conservation") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + rng() % 10;
    FlowNetwork net(n, 0, n - 1);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        if (rng() % 3 != 0) continue;
        const Numerator c = static_cast<Numerator>(rng() % 1000);
        if (rng() % 2) net.set_capacity(u, v, c);
        else net.set_capacity(v, u, c);
      }
    }
    const auto r = max_flow(net);
    std::vector<Numerator> balance(n, 0);
    for (const auto& [e, f] : r.flow) {
      CHECK(f >= 0);
      CHECK(f <= net.capacity(e.first, e.second));
      balance[e.first] -= f;
      balance[e.second] += f;
    }
    for (std::size_t v = 1; v + 1 < n; ++v) CHECK(balance[v] == 0);
    CHECK(balance[n - 1] == r.value);
    CHECK(r.value == oracle::exhaustive_min_cut(net));
    CHECK(net.cut_capacity(r.source_side) == r.value);
  }
}

TEST_CASE("disconnected sink carries zero flow") {
  FlowNetwork net(4, 0, 3);
  net.set_capacity(0, 1, 5);
  net.set_capacity(1, 2, 5);
  CHECK(max_flow(net).value == 0);
}
