#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gnnbias/graph.hpp"

namespace gnnbias {

/// Largest subgraph size the enumerator accepts.
inline constexpr std::size_t kMaxSubgraphSize = 5;

/// Color-attributed connected graph on at most kMaxSubgraphSize nodes in
/// canonical form. Node t carries colors[t]; bit (i, j) of `adjacency` (for
/// i < j, packed row by row) is set when i and j are joined. The canonical
/// form is the lexicographically smallest (colors, adjacency) over all node
/// orderings, so isomorphic subgraphs compare equal.
struct CanonicalSubgraph {
  std::vector<Color> colors;
  std::uint32_t adjacency = 0;

  std::size_t size() const { return colors.size(); }
  std::vector<Edge> edges() const;

  auto operator<=>(const CanonicalSubgraph&) const = default;
  bool operator==(const CanonicalSubgraph&) const = default;
};

/// Bit index of pair (i, j), i < j, among m nodes.
std::size_t pair_bit(std::size_t i, std::size_t j, std::size_t m);

/// Canonical form of the subgraph with the given node colors and edges.
/// Throws InvalidArgument above kMaxSubgraphSize nodes.
CanonicalSubgraph canonicalize(const std::vector<Color>& colors, const std::vector<Edge>& edges);
CanonicalSubgraph canonicalize(const Pattern& p);

/// Every connected subgraph of g with at most k nodes, including the
/// non-induced ones (any connected spanning edge subset of a connected node
/// set). Throws InvalidArgument when k is 0 or above kMaxSubgraphSize.
std::set<CanonicalSubgraph> enumerate_subgraphs(const Graph& g, std::size_t k);

/// Brute-force containment test: some injective map of the subgraph's nodes
/// preserves colors and maps every subgraph edge onto a graph edge.
bool contains_subgraph(const Graph& g, const CanonicalSubgraph& s);

struct SubgraphHit {
  CanonicalSubgraph subgraph;
  /// Fraction of D1 and D0 graphs that contain the subgraph.
  double d1_coverage = 0.0;
  double d0_coverage = 0.0;
};

struct SearchResult {
  std::size_t k = 0;
  std::size_t d1_graphs = 0;
  std::size_t d0_graphs = 0;
  std::vector<SubgraphHit> hits;

  std::string to_json() const;
};

/// Subgraphs present in every D1 graph and in no D0 graph. Throws
/// InvalidArgument when D1 is empty.
SearchResult exhaustive_search(const std::vector<Graph>& d1, const std::vector<Graph>& d0, std::size_t k);

}  // namespace gnnbias
