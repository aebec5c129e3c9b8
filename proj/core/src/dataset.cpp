#include "gnnbias/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "gnnbias/error.hpp"
#include "gnnbias/graph_io.hpp"
#include "json.hpp"

namespace gnnbias {

using nlohmann::json;

Pattern SynthSpec::pattern() const {
  std::vector<Color> colors(pattern_size);
  std::iota(colors.begin(), colors.end(), bg_colors);
  return pattern_kind == PatternKind::chain ? Pattern::chain(std::move(colors))
                                            : Pattern::star(std::move(colors));
}

void SynthSpec::validate() const {
  if (rows == 0 || cols == 0) throw InvalidArgument("grid dimensions must be positive");
  if (bg_colors == 0) throw InvalidArgument("need at least one background color");
  if (pattern_size < 2) throw InvalidArgument("pattern needs at least two nodes");
  if (rows * cols < pattern_size) throw InvalidArgument("grid too small to host the pattern");
  if (per_partition_count == 0) throw InvalidArgument("per_partition_count must be >= 1");
  if (retry_budget == 0) throw InvalidArgument("retry_budget must be >= 1");
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json j;
  j["source"] = "grid";
  j["rows"] = spec.rows;
  j["cols"] = spec.cols;
  j["bg_colors"] = spec.bg_colors;
  j["pattern_kind"] = std::string(to_string(spec.pattern_kind));
  j["pattern_size"] = spec.pattern_size;
  j["per_partition_count"] = spec.per_partition_count;
  j["dperp_count"] = spec.resolved_dperp_count();
  j["seed"] = spec.seed;
  j["retry_budget"] = spec.retry_budget;
  j["palette_size"] = spec.palette_size();
  return j.dump(2);
}

SynthSpec synth_spec_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    SynthSpec s;
    s.rows = j.at("rows").get<std::size_t>();
    s.cols = j.at("cols").get<std::size_t>();
    s.bg_colors = j.at("bg_colors").get<std::size_t>();
    s.pattern_kind = pattern_kind_from_string(j.at("pattern_kind").get<std::string>());
    s.pattern_size = j.at("pattern_size").get<std::size_t>();
    s.per_partition_count = j.at("per_partition_count").get<std::size_t>();
    if (j.contains("dperp_count")) s.dperp_count = j.at("dperp_count").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("retry_budget")) s.retry_budget = j.at("retry_budget").get<std::size_t>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("spec.json: ") + e.what());
  }
}

std::vector<Graph> PartitionedDataset::partition(Partition part) const {
  std::vector<Graph> out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (tags[i] == part) out.push_back(graphs[i]);
  }
  return out;
}

std::vector<Graph> PartitionedDataset::labeled() const {
  auto out = partition(Partition::d1);
  auto d0 = partition(Partition::d0);
  out.insert(out.end(), std::make_move_iterator(d0.begin()), std::make_move_iterator(d0.end()));
  return out;
}

std::size_t PartitionedDataset::count(Partition part) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), part));
}

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::vector<NodeId> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), NodeId{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + uniform_index(rng, n - i)]);
  all.resize(k);
  return all;
}

// Random connected node set of size k grown from a random seed node.
std::optional<std::vector<NodeId>> sample_connected(const Graph& g, Rng& rng, std::size_t k) {
  std::vector<NodeId> set{uniform_index(rng, g.num_nodes())};
  while (set.size() < k) {
    std::vector<NodeId> frontier;
    for (NodeId u : set) {
      for (NodeId v : g.neighbors(u)) {
        if (std::find(set.begin(), set.end(), v) == set.end() &&
            std::find(frontier.begin(), frontier.end(), v) == frontier.end()) {
          frontier.push_back(v);
        }
      }
    }
    if (frontier.empty()) return std::nullopt;
    std::sort(frontier.begin(), frontier.end());
    set.push_back(frontier[uniform_index(rng, frontier.size())]);
  }
  return set;
}

void check_disjoint(const Graph& host, const Pattern& p) {
  for (Color c : host.colors()) {
    if (std::find(p.colors().begin(), p.colors().end(), c) != p.colors().end()) {
      throw InvalidArgument("host colors overlap the pattern palette");
    }
  }
}

Rng sample_rng(std::uint64_t seed, std::uint32_t stream, std::size_t index, std::size_t attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(attempt)};
  return Rng(seq);
}

// Proper pattern-node subsets used for D0, ordered by size then lexicographically.
std::vector<std::vector<std::size_t>> partial_subsets(std::size_t m) {
  const std::size_t max_size = std::min<std::size_t>(2, m - 1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back({i});
  if (max_size >= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) out.push_back({i, j});
    }
  }
  return out;
}

}  // namespace

Graph plant_full(const Graph& g, const Pattern& p, NodeId anchor, Rng& rng) {
  const auto center = p.center();
  if (!center) throw InvalidArgument("pattern has no center node; cannot plant around an anchor");
  if (anchor >= g.num_nodes()) throw InvalidArgument("anchor out of range");
  const std::size_t m = p.size();
  const auto nb = g.neighbors(anchor);
  if (nb.size() + 1 < m) {
    throw InvalidArgument("invalid anchor: degree " + std::to_string(nb.size()) + " < " +
                          std::to_string(m - 1));
  }
  auto chosen = sample_distinct(rng, nb.size(), m - 1);
  Graph out = g;
  Embedding s(m);
  s[*center] = anchor;
  out.recolor(anchor, p.colors()[*center]);
  std::size_t k = 0;
  for (std::size_t t = 0; t < m; ++t) {
    if (t == *center) continue;
    s[t] = nb[chosen[k++]];
    out.recolor(s[t], p.colors()[t]);
  }
  out.set_anchor(std::move(s));
  out.set_label(1);
  return out;
}

Graph plant_partial_subset(const Graph& g, const Pattern& p,
                           const std::vector<std::size_t>& pattern_nodes, bool connected, Rng& rng) {
  if (pattern_nodes.empty() || pattern_nodes.size() >= p.size()) {
    throw InvalidArgument("partial planting needs a nonempty strict subset of the pattern");
  }
  if (pattern_nodes.size() > g.num_nodes()) throw InvalidArgument("graph too small");
  std::vector<NodeId> hosts;
  if (connected && pattern_nodes.size() > 1) {
    std::optional<std::vector<NodeId>> set;
    for (int attempt = 0; attempt < 100 && !set; ++attempt) {
      set = sample_connected(g, rng, pattern_nodes.size());
    }
    if (!set) throw SynthesisFailure("no connected placement for partial pattern");
    hosts = std::move(*set);
  } else {
    hosts = sample_distinct(rng, g.num_nodes(), pattern_nodes.size());
  }
  Graph out = g;
  for (std::size_t i = 0; i < hosts.size(); ++i) out.recolor(hosts[i], p.colors()[pattern_nodes[i]]);
  out.set_anchor(std::move(hosts));
  out.set_label(0);
  return out;
}

Graph plant_partial(const Graph& g, const Pattern& p, std::size_t subset_size, Rng& rng) {
  if (subset_size == 0 || subset_size >= p.size()) {
    throw InvalidArgument("subset_size must be in [1, M)");
  }
  auto nodes = sample_distinct(rng, p.size(), subset_size);
  return plant_partial_subset(g, p, nodes, false, rng);
}

namespace {

bool scattered_ok(const Graph& g, const std::vector<NodeId>& nodes) {
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      if (g.has_edge(nodes[a], nodes[b])) return false;
    }
  }
  if (nodes.size() < 2) return true;
  // No node may see every pattern node in its neighbourhood.
  for (NodeId v : g.neighbors(nodes[0])) {
    bool all = true;
    for (std::size_t b = 1; b < nodes.size() && all; ++b) all = g.has_edge(v, nodes[b]);
    if (all) return false;
  }
  return true;
}

}  // namespace

Graph plant_scattered(const Graph& g, const Pattern& p, Rng& rng, std::size_t retry_budget) {
  const std::size_t m = p.size();
  if (g.num_nodes() >= m) {
    for (std::size_t attempt = 0; attempt < retry_budget; ++attempt) {
      auto nodes = sample_distinct(rng, g.num_nodes(), m);
      if (!scattered_ok(g, nodes)) continue;
      Graph out = g;
      for (std::size_t t = 0; t < m; ++t) out.recolor(nodes[t], p.colors()[t]);
      if (classify_partition(out, p) != Partition::dperp) continue;
      out.set_anchor(std::move(nodes));
      out.set_label(std::nullopt);
      return out;
    }
  }
  throw SynthesisFailure("scattered planting: no pairwise non-adjacent placement of " +
                         std::to_string(m) + " nodes found in " + std::to_string(retry_budget) +
                         " draws on a graph with " + std::to_string(g.num_nodes()) + " nodes");
}

PartitionedDataset synth_grid_partition(const SynthSpec& spec) {
  spec.validate();
  const Pattern pattern = spec.pattern();
  std::vector<Color> bg(spec.bg_colors);
  std::iota(bg.begin(), bg.end(), Color{0});
  const std::size_t n = spec.rows * spec.cols;

  const Graph lattice = grid_graph(spec.rows, spec.cols, bg, spec.seed);
  std::vector<NodeId> eligible;
  for (NodeId v = 0; v < n; ++v) {
    if (lattice.degree(v) + 1 >= pattern.size()) eligible.push_back(v);
  }
  if (eligible.empty()) throw SynthesisFailure("no grid node has enough neighbours to anchor the pattern");
  const auto subsets = partial_subsets(pattern.size());

  PartitionedDataset ds;
  ds.pattern = pattern;
  ds.palette_size = spec.palette_size();
  ds.provenance = synth_spec_to_json(spec);

  auto produce = [&](Partition part, std::size_t index) {
    const auto stream = static_cast<std::uint32_t>(part);
    for (std::size_t attempt = 0; attempt < spec.retry_budget; ++attempt) {
      Rng rng = sample_rng(spec.seed, stream, index, attempt);
      const Graph base = grid_graph(spec.rows, spec.cols, bg, rng());
      Graph g;
      switch (part) {
        case Partition::d1: {
          // Sweep every eligible anchor once before reusing anchors at random.
          const NodeId anchor = index < eligible.size() ? eligible[index]
                                                        : eligible[uniform_index(rng, eligible.size())];
          g = plant_full(base, pattern, anchor, rng);
          break;
        }
        case Partition::d0: {
          const auto& subset = subsets[index % subsets.size()];
          const bool connected = (index / subsets.size()) % 2 == 0;
          g = plant_partial_subset(base, pattern, subset, connected, rng);
          break;
        }
        case Partition::dperp:
          g = plant_scattered(base, pattern, rng, spec.retry_budget);
          break;
      }
      if (classify_partition(g, pattern) == part) return g;
    }
    throw SynthesisFailure("sample " + std::to_string(index) + " of partition " +
                           std::string(to_string(part)) + " failed verification " +
                           std::to_string(spec.retry_budget) + " times");
  };

  for (Partition part : {Partition::d1, Partition::d0}) {
    for (std::size_t i = 0; i < spec.per_partition_count; ++i) {
      ds.graphs.push_back(produce(part, i));
      ds.tags.push_back(part);
    }
  }
  for (std::size_t i = 0; i < spec.resolved_dperp_count(); ++i) {
    ds.graphs.push_back(produce(Partition::dperp, i));
    ds.tags.push_back(Partition::dperp);
  }
  return ds;
}

std::string_view to_string(PlantMode mode) {
  switch (mode) {
    case PlantMode::full: return "full";
    case PlantMode::partial: return "partial";
    case PlantMode::scattered: return "scattered";
  }
  return "?";
}

PlantMode plant_mode_from_string(std::string_view name) {
  if (name == "full") return PlantMode::full;
  if (name == "partial") return PlantMode::partial;
  if (name == "scattered") return PlantMode::scattered;
  throw InvalidArgument("unknown plant mode '" + std::string(name) + "'");
}

namespace {

// Adds the listed pattern nodes as new host nodes with their induced pattern
// edges; returns the new node ids in the same order.
std::vector<NodeId> append_pattern_nodes(Graph& g, const Pattern& p, const std::vector<std::size_t>& nodes,
                                         bool with_edges) {
  std::vector<NodeId> ids;
  for (std::size_t t : nodes) ids.push_back(g.add_node(p.colors()[t]));
  if (with_edges) {
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        if (p.has_edge(nodes[a], nodes[b])) g.add_edge(ids[a], ids[b]);
      }
    }
  }
  return ids;
}

Graph plant_host_once(const Graph& host, const Pattern& p, PlantMode mode, Rng& rng) {
  const std::size_t m = p.size();
  const std::size_t h = host.num_nodes();
  Graph g = host;
  g.set_label(std::nullopt);
  g.set_anchor(std::nullopt);
  switch (mode) {
    case PlantMode::full: {
      std::vector<std::size_t> all(m);
      std::iota(all.begin(), all.end(), std::size_t{0});
      auto ids = append_pattern_nodes(g, p, all, true);
      if (h > 0) {
        const std::size_t anchors = 1 + uniform_index(rng, std::min(m - 1, h));
        for (NodeId a : sample_distinct(rng, h, anchors)) g.add_edge(a, ids[uniform_index(rng, m)]);
      }
      g.set_anchor(std::move(ids));
      g.set_label(1);
      return g;
    }
    case PlantMode::partial: {
      const std::size_t keep = 1 + uniform_index(rng, m - 1);
      auto chosen = sample_distinct(rng, m, keep);
      const std::size_t split = 1 + uniform_index(rng, keep);
      std::vector<std::size_t> s1(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(split));
      std::vector<std::size_t> s2(chosen.begin() + static_cast<std::ptrdiff_t>(split), chosen.end());
      std::vector<NodeId> placed;
      for (const auto& part : {s1, s2}) {
        if (part.empty()) continue;
        auto ids = append_pattern_nodes(g, p, part, true);
        if (h > 0) g.add_edge(uniform_index(rng, h), ids[uniform_index(rng, ids.size())]);
        placed.insert(placed.end(), ids.begin(), ids.end());
      }
      g.set_anchor(std::move(placed));
      g.set_label(0);
      return g;
    }
    case PlantMode::scattered: {
      if (h < m) throw SynthesisFailure("host too small for scattered planting");
      auto anchors = sample_distinct(rng, h, m);
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
          if (host.has_edge(anchors[a], anchors[b])) throw SynthesisFailure("adjacent anchors");
        }
      }
      std::vector<std::size_t> all(m);
      std::iota(all.begin(), all.end(), std::size_t{0});
      auto ids = append_pattern_nodes(g, p, all, false);
      for (std::size_t t = 0; t < m; ++t) g.add_edge(anchors[t], ids[t]);
      g.set_anchor(std::move(ids));
      return g;
    }
  }
  return g;
}

Partition expected_partition(PlantMode mode) {
  switch (mode) {
    case PlantMode::full: return Partition::d1;
    case PlantMode::partial: return Partition::d0;
    case PlantMode::scattered: return Partition::dperp;
  }
  return Partition::d0;
}

}  // namespace

PartitionedDataset plant_into_host(const std::vector<Graph>& hosts, const Pattern& p, PlantMode mode,
                                   Rng& rng, std::size_t retry_budget) {
  PartitionedDataset ds;
  ds.pattern = p;
  std::size_t palette = 0;
  for (Color c : p.colors()) palette = std::max(palette, c + 1);
  const Partition want = expected_partition(mode);
  for (std::size_t i = 0; i < hosts.size(); ++i) {
    check_disjoint(hosts[i], p);
    palette = std::max(palette, hosts[i].color_bound());
    std::optional<Graph> planted;
    for (std::size_t attempt = 0; attempt < retry_budget && !planted; ++attempt) {
      try {
        Graph g = plant_host_once(hosts[i], p, mode, rng);
        if (classify_partition(g, p) == want) planted = std::move(g);
      } catch (const SynthesisFailure&) {
      }
    }
    if (!planted) {
      throw SynthesisFailure("host " + std::to_string(i) + ": " + std::string(to_string(mode)) +
                             " planting failed verification " + std::to_string(retry_budget) + " times");
    }
    ds.graphs.push_back(std::move(*planted));
    ds.tags.push_back(want);
  }
  ds.palette_size = palette;
  json prov;
  prov["source"] = "host";
  prov["mode"] = std::string(to_string(mode));
  prov["hosts"] = hosts.size();
  prov["palette_size"] = palette;
  ds.provenance = prov.dump(2);
  return ds;
}

PartitionedDataset plant_host_partitions(const std::vector<Graph>& hosts, const Pattern& p, Rng& rng,
                                         std::size_t retry_budget) {
  PartitionedDataset out;
  out.pattern = p;
  for (PlantMode mode : {PlantMode::full, PlantMode::partial, PlantMode::scattered}) {
    auto part = plant_into_host(hosts, p, mode, rng, retry_budget);
    out.palette_size = std::max(out.palette_size, part.palette_size);
    for (std::size_t i = 0; i < part.graphs.size(); ++i) {
      out.graphs.push_back(std::move(part.graphs[i]));
      out.tags.push_back(part.tags[i]);
    }
  }
  json prov;
  prov["source"] = "host";
  prov["mode"] = "all";
  prov["hosts"] = hosts.size();
  prov["palette_size"] = out.palette_size;
  out.provenance = prov.dump(2);
  return out;
}

Graph random_host_graph(std::size_t n, double edge_prob, std::span<const Color> palette, Rng& rng) {
  if (palette.empty()) throw InvalidArgument("host palette must be nonempty");
  std::vector<Color> colors(n);
  for (auto& c : colors) c = palette[uniform_index(rng, palette.size())];
  Graph g(std::move(colors), {});
  std::bernoulli_distribution extra(edge_prob);
  for (NodeId v = 1; v < n; ++v) g.add_edge(v, uniform_index(rng, v));
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      if (extra(rng)) g.add_edge(a, b);
    }
  }
  return g;
}

Pattern pattern_after_hosts(const std::vector<Graph>& hosts, PatternKind kind, std::size_t size) {
  std::size_t base = 0;
  for (const auto& h : hosts) base = std::max(base, h.color_bound());
  std::vector<Color> colors(size);
  std::iota(colors.begin(), colors.end(), base);
  return kind == PatternKind::chain ? Pattern::chain(std::move(colors)) : Pattern::star(std::move(colors));
}

VerificationReport verify_partition(const PartitionedDataset& ds) {
  VerificationReport r;
  r.color_counts.assign(ds.palette_size, 0);
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& g = ds.graphs[i];
    const Partition tagged = ds.tags[i];
    const Partition actual = classify_partition(g, ds.pattern);
    if (actual != tagged) r.mismatches.push_back({i, tagged, actual});
    switch (tagged) {
      case Partition::d1:
        ++r.d1;
        if (g.label() != 1) ++r.label_violations;
        break;
      case Partition::d0:
        ++r.d0;
        if (g.label() != 0) ++r.label_violations;
        break;
      case Partition::dperp:
        ++r.dperp;
        if (g.label().has_value()) ++r.label_violations;
        break;
    }
    for (Color c : g.colors()) {
      if (c < r.color_counts.size()) {
        ++r.color_counts[c];
      } else {
        ++r.palette_violations;
      }
    }
  }
  r.parity_ok = r.d1 == r.d0;
  return r;
}

void save_dataset(const std::filesystem::path& dir, const PartitionedDataset& ds) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_graphs_jsonl(dir / "d1.jsonl", ds.partition(Partition::d1));
  write_graphs_jsonl(dir / "d0.jsonl", ds.partition(Partition::d0));
  write_graphs_jsonl(dir / "dperp.jsonl", ds.partition(Partition::dperp));
  write_text_file(dir / "pattern.json", pattern_to_json(ds.pattern) + "\n");
  write_text_file(dir / "spec.json", ds.provenance + "\n");
}

PartitionedDataset load_dataset(const std::filesystem::path& dir) {
  PartitionedDataset ds;
  ds.pattern = pattern_from_json(read_text_file(dir / "pattern.json"));
  const struct {
    const char* file;
    Partition part;
  } parts[] = {{"d1.jsonl", Partition::d1}, {"d0.jsonl", Partition::d0}, {"dperp.jsonl", Partition::dperp}};
  for (const auto& [file, part] : parts) {
    const auto path = dir / file;
    if (part == Partition::dperp && !std::filesystem::exists(path)) continue;
    for (auto& g : read_graphs_jsonl(path)) {
      ds.graphs.push_back(std::move(g));
      ds.tags.push_back(part);
    }
  }
  std::size_t palette = 0;
  for (Color c : ds.pattern.colors()) palette = std::max(palette, c + 1);
  for (const auto& g : ds.graphs) palette = std::max(palette, g.color_bound());
  const auto spec_path = dir / "spec.json";
  if (std::filesystem::exists(spec_path)) {
    ds.provenance = read_text_file(spec_path);
    while (!ds.provenance.empty() && ds.provenance.back() == '\n') ds.provenance.pop_back();
    try {
      const json j = json::parse(ds.provenance);
      if (j.contains("palette_size")) palette = std::max(palette, j.at("palette_size").get<std::size_t>());
    } catch (const json::exception& e) {
      throw ParseError((spec_path.string() + ": ") + e.what());
    }
  }
  ds.palette_size = palette;
  return ds;
}

}  // namespace gnnbias
