#include "gnnbias/subgraph.hpp"

#include <algorithm>
#include <numeric>

#include "gnnbias/error.hpp"
#include "json.hpp"

namespace gnnbias {

std::size_t pair_bit(std::size_t i, std::size_t j, std::size_t m) {
  if (i > j) std::swap(i, j);
  // Pairs before row i: (m-1) + (m-2) + ... + (m-i).
  return i * (2 * m - i - 1) / 2 + (j - i - 1);
}

std::vector<Edge> CanonicalSubgraph::edges() const {
  std::vector<Edge> out;
  const std::size_t m = size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (adjacency >> pair_bit(i, j, m) & 1u) out.emplace_back(i, j);
    }
  }
  return out;
}

CanonicalSubgraph canonicalize(const std::vector<Color>& colors, const std::vector<Edge>& edges) {
  const std::size_t m = colors.size();
  if (m == 0 || m > kMaxSubgraphSize) {
    throw InvalidArgument("subgraph size must be between 1 and " + std::to_string(kMaxSubgraphSize));
  }
  bool adj[kMaxSubgraphSize][kMaxSubgraphSize] = {};
  for (const auto& [u, v] : edges) {
    if (u >= m || v >= m || u == v) throw InvalidArgument("invalid subgraph edge");
    adj[u][v] = adj[v][u] = true;
  }
  // perm[t] is the original node placed at canonical position t. Only
  // orderings with non-decreasing colors can be minimal, so start from the
  // color-sorted order and permute within equal-color runs.
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return colors[a] < colors[b]; });

  CanonicalSubgraph best;
  best.colors.resize(m);
  for (std::size_t t = 0; t < m; ++t) best.colors[t] = colors[perm[t]];
  best.adjacency = ~0u;

  std::sort(perm.begin(), perm.end());
  do {
    bool sorted = true;
    for (std::size_t t = 1; t < m && sorted; ++t) sorted = colors[perm[t - 1]] <= colors[perm[t]];
    if (!sorted) continue;
    std::uint32_t key = 0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (adj[perm[i]][perm[j]]) key |= 1u << pair_bit(i, j, m);
      }
    }
    best.adjacency = std::min(best.adjacency, key);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CanonicalSubgraph canonicalize(const Pattern& p) { return canonicalize(p.colors(), p.edges()); }

namespace {

// Extends `current` by one neighbour at a time, recording every connected
// node set once (sets are kept sorted in `seen`).
void grow(const Graph& g, std::vector<NodeId>& current, std::size_t k, std::set<std::vector<NodeId>>& seen) {
  std::vector<NodeId> key = current;
  std::sort(key.begin(), key.end());
  if (!seen.insert(key).second) return;
  if (current.size() == k) return;
  for (std::size_t idx = 0; idx < current.size(); ++idx) {
    for (NodeId nb : g.neighbors(current[idx])) {
      if (std::find(current.begin(), current.end(), nb) != current.end()) continue;
      current.push_back(nb);
      grow(g, current, k, seen);
      current.pop_back();
    }
  }
}

bool spans_connected(std::size_t m, const std::vector<Edge>& edges, std::uint32_t mask) {
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = m;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!(mask >> e & 1u)) continue;
    const std::size_t a = find(edges[e].first);
    const std::size_t b = find(edges[e].second);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

}  // namespace

std::set<CanonicalSubgraph> enumerate_subgraphs(const Graph& g, std::size_t k) {
  if (k == 0 || k > kMaxSubgraphSize) {
    throw InvalidArgument("subgraph enumeration supports 1 <= k <= " + std::to_string(kMaxSubgraphSize) +
                          " (got " + std::to_string(k) + ")");
  }
  std::set<std::vector<NodeId>> node_sets;
  std::vector<NodeId> current;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    current.assign(1, v);
    grow(g, current, k, node_sets);
  }

  std::set<CanonicalSubgraph> out;
  for (const auto& nodes : node_sets) {
    const std::size_t m = nodes.size();
    std::vector<Color> colors(m);
    for (std::size_t t = 0; t < m; ++t) colors[t] = g.color(nodes[t]);
    std::vector<Edge> induced;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        if (g.has_edge(nodes[i], nodes[j])) induced.emplace_back(i, j);
      }
    }
    const std::uint32_t full = induced.empty() ? 0u : (1u << induced.size()) - 1u;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (!spans_connected(m, induced, mask)) continue;
      std::vector<Edge> chosen;
      for (std::size_t e = 0; e < induced.size(); ++e) {
        if (mask >> e & 1u) chosen.push_back(induced[e]);
      }
      out.insert(canonicalize(colors, chosen));
    }
  }
  return out;
}

namespace {

bool extend_map(const Graph& g, const CanonicalSubgraph& s, std::vector<NodeId>& image, std::size_t t) {
  const std::size_t m = s.size();
  if (t == m) return true;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.color(v) != s.colors[t]) continue;
    if (std::find(image.begin(), image.begin() + static_cast<std::ptrdiff_t>(t), v) !=
        image.begin() + static_cast<std::ptrdiff_t>(t)) {
      continue;
    }
    bool ok = true;
    for (std::size_t u = 0; u < t && ok; ++u) {
      if (s.adjacency >> pair_bit(u, t, m) & 1u) ok = g.has_edge(image[u], v);
    }
    if (!ok) continue;
    image[t] = v;
    if (extend_map(g, s, image, t + 1)) return true;
  }
  return false;
}

}  // namespace

bool contains_subgraph(const Graph& g, const CanonicalSubgraph& s) {
  std::vector<NodeId> image(s.size());
  return extend_map(g, s, image, 0);
}

SearchResult exhaustive_search(const std::vector<Graph>& d1, const std::vector<Graph>& d0, std::size_t k) {
  if (d1.empty()) throw InvalidArgument("exhaustive search needs at least one D1 graph");
  std::vector<std::set<CanonicalSubgraph>> s1;
  s1.reserve(d1.size());
  for (const Graph& g : d1) s1.push_back(enumerate_subgraphs(g, k));
  std::vector<std::set<CanonicalSubgraph>> s0;
  s0.reserve(d0.size());
  for (const Graph& g : d0) s0.push_back(enumerate_subgraphs(g, k));

  std::set<CanonicalSubgraph> common = s1.front();
  for (std::size_t i = 1; i < s1.size() && !common.empty(); ++i) {
    std::set<CanonicalSubgraph> next;
    std::set_intersection(common.begin(), common.end(), s1[i].begin(), s1[i].end(),
                          std::inserter(next, next.end()));
    common = std::move(next);
  }
  for (const auto& neg : s0) {
    for (const auto& sg : neg) common.erase(sg);
  }

  SearchResult r;
  r.k = k;
  r.d1_graphs = d1.size();
  r.d0_graphs = d0.size();
  auto coverage = [](const std::vector<std::set<CanonicalSubgraph>>& sets, const CanonicalSubgraph& sg) {
    if (sets.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : sets) hits += s.count(sg);
    return static_cast<double>(hits) / static_cast<double>(sets.size());
  };
  for (const auto& sg : common) r.hits.push_back({sg, coverage(s1, sg), coverage(s0, sg)});
  return r;
}

std::string SearchResult::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["d1_graphs"] = d1_graphs;
  j["d0_graphs"] = d0_graphs;
  j["subgraphs"] = nlohmann::json::array();
  for (const auto& h : hits) {
    nlohmann::json e;
    e["size"] = h.subgraph.size();
    e["colors"] = h.subgraph.colors;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : h.subgraph.edges()) edges.push_back({a, b});
    e["edges"] = edges;
    e["d1_coverage"] = h.d1_coverage;
    e["d0_coverage"] = h.d0_coverage;
    j["subgraphs"].push_back(e);
  }
  return j.dump(2) + "\n";
}

}  // namespace gnnbias
