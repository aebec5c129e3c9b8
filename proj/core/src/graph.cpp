#include "gnnbias/graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>

#include "gnnbias/error.hpp"

namespace gnnbias {

Graph::Graph(std::vector<Color> colors, std::span<const Edge> edges)
    : colors_(std::move(colors)), adjacency_(colors_.size()) {
  for (const auto& [i, j] : edges) add_edge(i, j);
}

bool Graph::has_edge(NodeId i, NodeId j) const {
  if (i >= adjacency_.size() || j >= adjacency_.size()) return false;
  const auto& nb = adjacency_[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges_);
  for (NodeId i = 0; i < adjacency_.size(); ++i) {
    for (NodeId j : adjacency_[i]) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

std::size_t Graph::color_bound() const {
  std::size_t bound = 0;
  for (Color c : colors_) bound = std::max(bound, c + 1);
  return bound;
}

void Graph::set_label(std::optional<int> label) {
  if (label && *label != 0 && *label != 1) throw InvalidArgument("graph label must be 0 or 1");
  label_ = label;
}

void Graph::set_anchor(std::optional<std::vector<NodeId>> anchor) {
  if (anchor) {
    for (NodeId a : *anchor) {
      if (a >= num_nodes()) throw InvalidArgument("anchor index out of range");
    }
  }
  anchor_ = std::move(anchor);
}

Graph Graph::recolored(NodeId i, Color c) const {
  Graph g = *this;
  g.recolor(i, c);
  return g;
}

void Graph::recolor(NodeId i, Color c) {
  if (i >= colors_.size()) throw InvalidArgument("recolor: node out of range");
  colors_[i] = c;
}

Graph Graph::permuted(std::span<const NodeId> perm) const {
  const std::size_t n = num_nodes();
  if (perm.size() != n) throw InvalidArgument("permutation length mismatch");
  std::vector<Color> colors(n);
  for (NodeId i = 0; i < n; ++i) colors[perm[i]] = colors_[i];
  std::vector<Edge> mapped;
  for (const auto& [i, j] : edges()) mapped.emplace_back(perm[i], perm[j]);
  Graph out(std::move(colors), mapped);
  out.label_ = label_;
  if (anchor_) {
    std::vector<NodeId> a;
    for (NodeId x : *anchor_) a.push_back(perm[x]);
    out.anchor_ = std::move(a);
  }
  return out;
}

NodeId Graph::add_node(Color c) {
  colors_.push_back(c);
  adjacency_.emplace_back();
  return colors_.size() - 1;
}

void Graph::add_edge(NodeId i, NodeId j) {
  const std::size_t n = colors_.size();
  if (i >= n || j >= n) throw InvalidArgument("edge endpoint out of range");
  if (i == j) throw InvalidArgument("self loops are not stored in the adjacency");
  auto insert = [](std::vector<NodeId>& nb, NodeId v) {
    auto it = std::lower_bound(nb.begin(), nb.end(), v);
    if (it != nb.end() && *it == v) return false;
    nb.insert(it, v);
    return true;
  };
  if (insert(adjacency_[i], j)) {
    insert(adjacency_[j], i);
    ++num_edges_;
  }
}

void check_palette(const Graph& g, std::size_t palette_size) {
  for (Color c : g.colors()) {
    if (c >= palette_size) {
      throw InvalidArgument("color " + std::to_string(c) + " outside palette of size " +
                            std::to_string(palette_size));
    }
  }
}

std::string_view to_string(PatternKind kind) {
  return kind == PatternKind::chain ? "chain" : "star";
}

PatternKind pattern_kind_from_string(std::string_view name) {
  if (name == "chain") return PatternKind::chain;
  if (name == "star") return PatternKind::star;
  throw InvalidArgument("unknown pattern kind '" + std::string(name) + "'");
}

Pattern Pattern::chain(std::vector<Color> colors) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < colors.size(); ++i) edges.emplace_back(i - 1, i);
  return Pattern(PatternKind::chain, std::move(colors), std::move(edges));
}

Pattern Pattern::star(std::vector<Color> colors) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < colors.size(); ++i) edges.emplace_back(0, i);
  return Pattern(PatternKind::star, std::move(colors), std::move(edges));
}

Pattern::Pattern(PatternKind kind, std::vector<Color> colors, std::vector<Edge> edges)
    : kind_(kind), colors_(std::move(colors)) {
  const std::size_t m = colors_.size();
  if (m == 0) throw InvalidArgument("pattern must have at least one node");
  auto sorted = colors_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("pattern colors must be pairwise distinct");
  }
  adjacency_.assign(m * m, 0);
  for (auto [i, j] : edges) {
    if (i >= m || j >= m || i == j) throw InvalidArgument("invalid pattern edge");
    if (i > j) std::swap(i, j);
    if (adjacency_[i * m + j]) continue;
    adjacency_[i * m + j] = adjacency_[j * m + i] = 1;
    edges_.emplace_back(i, j);
  }
  std::sort(edges_.begin(), edges_.end());

  std::vector<bool> seen(m, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < m; ++v) {
      if (adjacency_[u * m + v] && !seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != m) throw InvalidArgument("pattern adjacency must be connected");
}

bool Pattern::has_edge(std::size_t i, std::size_t j) const {
  const std::size_t m = size();
  return i < m && j < m && adjacency_[i * m + j] != 0;
}

std::optional<std::size_t> Pattern::center() const {
  const std::size_t m = size();
  for (std::size_t c = 0; c < m; ++c) {
    bool hub = true;
    for (std::size_t j = 0; j < m && hub; ++j) {
      if (j != c && !has_edge(c, j)) hub = false;
    }
    if (hub) return c;
  }
  return std::nullopt;
}

Graph Pattern::as_graph() const { return Graph(colors_, edges_); }

Graph grid_graph(std::size_t rows, std::size_t cols, std::span<const Color> palette,
                 std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw InvalidArgument("grid dimensions must be positive");
  if (palette.empty()) throw InvalidArgument("grid palette must be nonempty");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, palette.size() - 1);
  std::vector<Color> colors(rows * cols);
  for (auto& c : colors) c = palette[pick(rng)];
  std::vector<Edge> edges;
  edges.reserve(2 * rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const NodeId v = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + cols);
    }
  }
  return Graph(std::move(colors), edges);
}

namespace {

// Candidate host nodes per pattern node, each list ascending.
std::vector<std::vector<NodeId>> candidates(const Graph& g, const Pattern& p) {
  std::vector<std::vector<NodeId>> out(p.size());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (g.color(v) == p.colors()[t]) out[t].push_back(v);
    }
  }
  return out;
}

}  // namespace

Occurrence occurs(const Graph& g, const Pattern& p, std::size_t cap) {
  Occurrence result;
  const auto cand = candidates(g, p);
  std::size_t total = 1;
  for (const auto& c : cand) {
    if (c.empty()) return result;
    if (total > std::numeric_limits<std::size_t>::max() / c.size()) {
      total = std::numeric_limits<std::size_t>::max();
    } else {
      total *= c.size();
    }
  }
  result.occurs = true;
  result.total = total;

  // Pattern colors are distinct, so witnesses are exactly the Cartesian
  // product of the candidate lists; odometer order is lexicographic.
  std::vector<std::size_t> digit(p.size(), 0);
  while (result.witnesses.size() < cap) {
    Embedding s(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) s[t] = cand[t][digit[t]];
    result.witnesses.push_back(std::move(s));
    std::size_t t = p.size();
    while (t > 0) {
      --t;
      if (++digit[t] < cand[t].size()) break;
      digit[t] = 0;
      if (t == 0) return result;
    }
  }
  return result;
}

std::optional<Embedding> connected_embedding(const Graph& g, const Pattern& p) {
  const auto cand = candidates(g, p);
  for (const auto& c : cand) {
    if (c.empty()) return std::nullopt;
  }
  const std::size_t m = p.size();
  Embedding s(m);
  std::vector<std::size_t> digit(m, 0);
  std::size_t t = 0;
  // Depth-first over tuples in lexicographic order, pruning on pattern edges
  // towards already-assigned positions.
  while (true) {
    if (digit[t] == cand[t].size()) {
      digit[t] = 0;
      if (t == 0) return std::nullopt;
      --t;
      ++digit[t];
      continue;
    }
    s[t] = cand[t][digit[t]];
    bool ok = true;
    for (std::size_t u = 0; u < t && ok; ++u) {
      if (p.has_edge(u, t) && !g.has_edge(s[u], s[t])) ok = false;
    }
    if (!ok) {
      ++digit[t];
      continue;
    }
    if (t + 1 == m) return s;
    ++t;
  }
}

std::string_view to_string(Partition part) {
  switch (part) {
    case Partition::d1: return "D1";
    case Partition::d0: return "D0";
    case Partition::dperp: return "Dperp";
  }
  return "?";
}

Partition classify_partition(const Graph& g, const Pattern& p) {
  if (connected_embedding(g, p)) return Partition::d1;
  if (!occurs(g, p, 0).occurs) return Partition::d0;
  return Partition::dperp;
}

std::optional<NodeId> anchor_center(const Graph& g, const Pattern& p) {
  const auto center = p.center();
  if (!center || !g.anchor() || g.anchor()->size() != p.size()) return std::nullopt;
  return (*g.anchor())[*center];
}

}  // namespace gnnbias
