#pragma once

// Random generators and brute-force reference implementations shared by the
// unit tests. The oracles here deliberately avoid the library's own helpers
// so that a bug in one does not hide a bug in the other.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "gnnbias/graph.hpp"
#include "gnnbias/matrix.hpp"

namespace testsupport {

using gnnbias::Color;
using gnnbias::Edge;
using gnnbias::Graph;
using gnnbias::NodeId;

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Erdos-Renyi style graph; not necessarily connected.
inline Graph random_graph(Rng& rng, std::size_t n, std::size_t palette, double p) {
  std::vector<Color> colors(n);
  for (auto& c : colors) c = uniform(rng, 0, palette - 1);
  std::vector<Edge> edges;
  std::bernoulli_distribution coin(p);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph(std::move(colors), edges);
}

/// Random tree plus extra edges, so the graph is connected.
inline Graph random_connected_graph(Rng& rng, std::size_t n, std::size_t palette, double extra) {
  std::vector<Color> colors(n);
  for (auto& c : colors) c = uniform(rng, 0, palette - 1);
  std::vector<Edge> edges;
  for (NodeId i = 1; i < n; ++i) edges.emplace_back(uniform(rng, 0, i - 1), i);
  std::bernoulli_distribution coin(extra);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph(std::move(colors), edges);
}

inline std::vector<NodeId> random_permutation(Rng& rng, std::size_t n) {
  std::vector<NodeId> p(n);
  std::iota(p.begin(), p.end(), NodeId{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

inline gnnbias::Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale) {
  gnnbias::Matrix m(r, c);
  for (double& x : m.values()) x = uniform_real(rng, -scale, scale);
  return m;
}

/// Every ordered tuple of distinct nodes whose colors match `colors`
/// position by position.
inline std::vector<std::vector<NodeId>> brute_tuples(const Graph& g, const std::vector<Color>& colors) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> cur;
  auto rec = [&](auto&& self) -> void {
    if (cur.size() == colors.size()) {
      out.push_back(cur);
      return;
    }
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      if (g.color(v) != colors[cur.size()]) continue;
      if (std::find(cur.begin(), cur.end(), v) != cur.end()) continue;
      cur.push_back(v);
      self(self);
      cur.pop_back();
    }
  };
  rec(rec);
  return out;
}

inline bool tuple_has_edges(const Graph& g, const std::vector<NodeId>& t, const std::vector<Edge>& edges) {
  for (const auto& [a, b] : edges) {
    if (!g.has_edge(t[a], t[b])) return false;
  }
  return true;
}

/// Brute-force canonical key: smallest (colors, adjacency bits) over every
/// permutation of the nodes, with bits in the same row-major pair order.
struct BruteKey {
  std::vector<Color> colors;
  std::uint32_t adjacency = 0;
  auto operator<=>(const BruteKey&) const = default;
};

inline BruteKey brute_canonical(const std::vector<Color>& colors, const std::vector<Edge>& edges) {
  const std::size_t m = colors.size();
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
  for (const auto& [a, b] : edges) adj[a][b] = adj[b][a] = true;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  bool first = true;
  BruteKey best;
  do {
    BruteKey k;
    for (std::size_t t = 0; t < m; ++t) k.colors.push_back(colors[perm[t]]);
    std::size_t bit = 0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j, ++bit) {
        if (adj[perm[i]][perm[j]]) k.adjacency |= 1u << bit;
      }
    }
    if (first || k < best) best = k;
    first = false;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline bool edge_subset_connected(std::size_t m, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> nb(m);
  for (const auto& [a, b] : edges) {
    nb[a].push_back(b);
    nb[b].push_back(a);
  }
  std::vector<bool> seen(m, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto u : nb[v]) {
      if (!seen[u]) {
        seen[u] = true;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == m;
}

/// Every connected subgraph with at most k nodes, found by trying every node
/// subset and every edge subset among its nodes.
inline std::set<BruteKey> brute_subgraphs(const Graph& g, std::size_t k) {
  std::set<BruteKey> out;
  const std::size_t n = g.num_nodes();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<NodeId> nodes;
    for (NodeId v = 0; v < n; ++v) {
      if (mask >> v & 1u) nodes.push_back(v);
    }
    if (nodes.size() > k) continue;
    std::vector<Edge> local;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        if (g.has_edge(nodes[i], nodes[j])) local.emplace_back(i, j);
      }
    }
    std::vector<Color> colors;
    for (NodeId v : nodes) colors.push_back(g.color(v));
    for (std::uint32_t em = 0; em < (1u << local.size()); ++em) {
      std::vector<Edge> chosen;
      for (std::size_t e = 0; e < local.size(); ++e) {
        if (em >> e & 1u) chosen.push_back(local[e]);
      }
      if (edge_subset_connected(nodes.size(), chosen)) out.insert(brute_canonical(colors, chosen));
    }
  }
  return out;
}

inline double max_abs_diff(const gnnbias::Matrix& a, const gnnbias::Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsupport
