#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace gnnbias {

using NodeId = std::size_t;
using Color = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected node-colored graph. Adjacency is symmetric and hollow; self
/// loops are a model-time option and are never stored here.
///
/// Instances are immutable once built, apart from the label/anchor metadata
/// that dataset synthesis attaches.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an edge list. Edges may be given in either
  /// orientation and are symmetrized; duplicates are merged.
  /// Throws InvalidArgument on self loops or out-of-range endpoints.
  Graph(std::vector<Color> colors, std::span<const Edge> edges);

  std::size_t num_nodes() const { return colors_.size(); }
  std::size_t num_edges() const { return num_edges_; }
  Color color(NodeId i) const { return colors_[i]; }
  const std::vector<Color>& colors() const { return colors_; }
  std::span<const NodeId> neighbors(NodeId i) const { return adjacency_[i]; }
  std::size_t degree(NodeId i) const { return adjacency_[i].size(); }
  bool has_edge(NodeId i, NodeId j) const;

  /// Edges with i < j, sorted lexicographically.
  std::vector<Edge> edges() const;

  /// Largest color index plus one (0 for the empty graph).
  std::size_t color_bound() const;

  const std::optional<int>& label() const { return label_; }
  const std::optional<std::vector<NodeId>>& anchor() const { return anchor_; }
  void set_label(std::optional<int> label);
  void set_anchor(std::optional<std::vector<NodeId>> anchor);

  /// Returns a copy with node `i` recolored.
  Graph recolored(NodeId i, Color c) const;
  void recolor(NodeId i, Color c);

  /// Relabels nodes: node i of this graph becomes node perm[i].
  Graph permuted(std::span<const NodeId> perm) const;

  /// Disjoint union helper used by host planting: appends nodes and edges.
  NodeId add_node(Color c);
  void add_edge(NodeId i, NodeId j);

  bool operator==(const Graph& other) const = default;

 private:
  std::vector<Color> colors_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t num_edges_ = 0;
  std::optional<int> label_;
  std::optional<std::vector<NodeId>> anchor_;
};

/// Throws InvalidArgument if any color is >= palette_size.
void check_palette(const Graph& g, std::size_t palette_size);

enum class PatternKind { chain, star };

std::string_view to_string(PatternKind kind);
PatternKind pattern_kind_from_string(std::string_view name);

/// The planted subgraph G*: M nodes with pairwise distinct colors and a
/// connected adjacency.
class Pattern {
 public:
  /// Path 0-1-...-(M-1) in the given color order.
  static Pattern chain(std::vector<Color> colors);
  /// Node 0 is the hub, joined to every other node.
  static Pattern star(std::vector<Color> colors);

  Pattern(PatternKind kind, std::vector<Color> colors, std::vector<Edge> edges);

  PatternKind kind() const { return kind_; }
  std::size_t size() const { return colors_.size(); }
  const std::vector<Color>& colors() const { return colors_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(std::size_t i, std::size_t j) const;

  /// Index of a node adjacent to every other pattern node, if one exists.
  /// For a 3-chain this is the middle node.
  std::optional<std::size_t> center() const;

  /// The pattern viewed as a standalone graph (node i carries colors()[i]).
  Graph as_graph() const;

  bool operator==(const Pattern& other) const = default;

 private:
  PatternKind kind_;
  std::vector<Color> colors_;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
};

/// Ordered tuple S of host nodes; S[t] hosts pattern node t.
using Embedding = std::vector<NodeId>;

/// 4-neighbourhood lattice with colors drawn uniformly from `palette`.
/// Node (r, c) has index r * cols + c.
Graph grid_graph(std::size_t rows, std::size_t cols, std::span<const Color> palette,
                 std::uint64_t seed);

struct Occurrence {
  bool occurs = false;
  /// Witness tuples in lexicographic order, truncated at the cap.
  std::vector<Embedding> witnesses;
  /// Exact number of witness tuples (saturates at SIZE_MAX).
  std::size_t total = 0;
};

inline constexpr std::size_t kDefaultWitnessCap = 1000;

Occurrence occurs(const Graph& g, const Pattern& p, std::size_t cap = kDefaultWitnessCap);

/// Lexicographically first occurrence tuple S with A[S,S] >= A*.
std::optional<Embedding> connected_embedding(const Graph& g, const Pattern& p);

enum class Partition { d1, d0, dperp };

std::string_view to_string(Partition part);

Partition classify_partition(const Graph& g, const Pattern& p);

/// Node hosting the pattern's center in a fully planted graph, read from the
/// anchor metadata (anchor lists host nodes in pattern order).
std::optional<NodeId> anchor_center(const Graph& g, const Pattern& p);

}  // namespace gnnbias
