#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gnnbias/graph.hpp"

namespace gnnbias {

using Rng = std::mt19937_64;

/// Parameters of the grid dataset. Background colors are 0..bg_colors-1 and
/// the pattern takes the next pattern_size colors, so the two palettes are
/// disjoint by construction.
struct SynthSpec {
  std::size_t rows = 12;
  std::size_t cols = 12;
  std::size_t bg_colors = 4;
  PatternKind pattern_kind = PatternKind::chain;
  std::size_t pattern_size = 3;
  std::size_t per_partition_count = 144;
  /// Size of the unlabeled D-perp partition; defaults to per_partition_count.
  std::optional<std::size_t> dperp_count;
  std::uint64_t seed = 0;
  std::size_t retry_budget = 100;

  Pattern pattern() const;
  std::size_t palette_size() const { return bg_colors + pattern_size; }
  std::size_t resolved_dperp_count() const { return dperp_count.value_or(per_partition_count); }
  void validate() const;
};

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

struct PartitionedDataset {
  std::vector<Graph> graphs;
  std::vector<Partition> tags;
  Pattern pattern = Pattern::chain({0});
  std::size_t palette_size = 0;
  /// JSON written to spec.json alongside the partitions.
  std::string provenance = "{}";

  std::vector<Graph> partition(Partition part) const;
  /// D1 followed by D0, in dataset order.
  std::vector<Graph> labeled() const;
  std::size_t count(Partition part) const;
};

/// Grid dataset: D1 by sweeping anchors, D0 by partial planting, D-perp by
/// scattered planting. Every sample is re-verified with classify_partition.
/// Throws SynthesisFailure when a sample cannot be produced within the retry
/// budget.
PartitionedDataset synth_grid_partition(const SynthSpec& spec);

/// Recolors `anchor` with the pattern's center color and M-1 random distinct
/// neighbours with the remaining colors. Anchor metadata lists the planted
/// nodes in pattern order and the label is set to 1.
/// Throws InvalidArgument if the anchor has fewer than M-1 neighbours or the
/// pattern has no center.
Graph plant_full(const Graph& g, const Pattern& p, NodeId anchor, Rng& rng);

/// Places `subset_size` random distinct pattern colors on random distinct
/// nodes (label 0).
Graph plant_partial(const Graph& g, const Pattern& p, std::size_t subset_size, Rng& rng);

/// Places the given pattern nodes' colors. With `connected` the host nodes
/// form a random connected set, otherwise they are random distinct nodes.
Graph plant_partial_subset(const Graph& g, const Pattern& p,
                           const std::vector<std::size_t>& pattern_nodes, bool connected, Rng& rng);

/// Places all M pattern colors on pairwise non-adjacent nodes such that no
/// node is adjacent to every one of them. Throws SynthesisFailure when no
/// such placement is found within `retry_budget` draws.
Graph plant_scattered(const Graph& g, const Pattern& p, Rng& rng, std::size_t retry_budget = 100);

enum class PlantMode { full, partial, scattered };

std::string_view to_string(PlantMode mode);
PlantMode plant_mode_from_string(std::string_view name);

/// Plants the pattern into every host as new nodes. Host colors must be
/// disjoint from the pattern colors.
PartitionedDataset plant_into_host(const std::vector<Graph>& hosts, const Pattern& p,
                                   PlantMode mode, Rng& rng, std::size_t retry_budget = 100);

/// D1 (full), D0 (partial) and D-perp (scattered) built from the same hosts,
/// so |D1| = |D0|.
PartitionedDataset plant_host_partitions(const std::vector<Graph>& hosts, const Pattern& p,
                                         Rng& rng, std::size_t retry_budget = 100);

/// Connected random graph: random recursive tree plus independent extra
/// edges with probability `edge_prob`.
Graph random_host_graph(std::size_t n, double edge_prob, std::span<const Color> palette, Rng& rng);

/// Pattern whose colors follow the largest color used by any host.
Pattern pattern_after_hosts(const std::vector<Graph>& hosts, PatternKind kind, std::size_t size);

struct PartitionMismatch {
  std::size_t index;
  Partition tagged;
  Partition actual;
};

struct VerificationReport {
  std::vector<PartitionMismatch> mismatches;
  std::size_t d1 = 0;
  std::size_t d0 = 0;
  std::size_t dperp = 0;
  bool parity_ok = false;
  std::size_t label_violations = 0;
  std::size_t palette_violations = 0;
  /// Node count per color over the whole dataset.
  std::vector<std::size_t> color_counts;

  bool ok() const {
    return mismatches.empty() && parity_ok && label_violations == 0 && palette_violations == 0;
  }
};

VerificationReport verify_partition(const PartitionedDataset& ds);

/// Directory layout: d1.jsonl, d0.jsonl, dperp.jsonl, pattern.json, spec.json.
void save_dataset(const std::filesystem::path& dir, const PartitionedDataset& ds);
PartitionedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace gnnbias
