#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gnnbias/dataset.hpp"
#include "gnnbias/graph.hpp"
#include "gnnbias/matrix.hpp"
#include "gnnbias/model.hpp"
#include "gnnbias/training.hpp"

namespace gnnbias {

/// Indicator of the pattern colors as a (K, 1) column.
Matrix v_star(const Pattern& p, std::size_t palette_size);

/// Closed-neighbourhood color counts, (N, K). Row i is the theory-mode
/// representation of node i.
Matrix theory_reps(const Graph& g, std::size_t palette_size);

struct TheoryBounds {
  /// Largest v_i . v_j over distinct nodes of the same graph.
  double theta = 0.0;
  /// Largest v_i . v_i.
  double theta_d = 0.0;
};

TheoryBounds measure_bounds(const std::vector<Graph>& graphs, std::size_t palette_size);
TheoryBounds measure_bounds(const PartitionedDataset& ds);

struct AnchorAlignment {
  std::size_t d1_graphs = 0;
  /// Graphs whose anchor representation has a positive inner product with v*.
  std::size_t positive = 0;
  /// Graphs whose anchor representation contains every pattern color.
  std::size_t covers_pattern = 0;
  std::size_t missing_anchor = 0;

  bool passed() const { return d1_graphs > 0 && positive == d1_graphs && covers_pattern == d1_graphs; }
};
AnchorAlignment check_anchor_alignment(const PartitionedDataset& ds);

/// For every direction u (a K-vector orthogonal to v* and supported on the
/// pattern colors) there should be a D0 graph whose representations all
/// satisfy <rep, u> <= 0.
struct DirectionWitnesses {
  std::vector<Matrix> directions;
  /// Index into the D0 partition of the witnessing graph, per direction.
  std::vector<std::optional<std::size_t>> witnesses;

  bool passed() const;
};
/// The fixed direction set: e_i - e_j for ordered pairs of pattern colors and
/// 2 e_i - sum of the others, for each pattern color.
std::vector<Matrix> orthogonal_directions(const Pattern& p, std::size_t palette_size);
DirectionWitnesses check_direction_witnesses(const PartitionedDataset& ds);

/// True when no single node of `g` sees every pattern color in its closed
/// neighbourhood.
bool no_node_covers_pattern(const Graph& g, const Pattern& p, std::size_t palette_size);

struct AlignmentRecord {
  std::size_t step = 0;
  double dot_w_vstar = 0.0;
  double dot_a_vstar = 0.0;
  double psi_s = 0.0;
  double psi_max = 0.0;
  /// psi_s / psi_max; NaN when psi_max <= 0.
  double q = 0.0;
  double alpha_s = 0.0;
  double delta_w_vstar = 0.0;
  /// Fraction of (non-anchor node, condition) pairs satisfying
  /// w.v* > w.v_i and a.v* > a.v_i on the probe graph.
  double dominance_fraction = 0.0;
  /// max_j (b_j - a_j) / (a_s (1 - a_s) + a_j a_s) + 1 with a_j, b_j the
  /// attention weights of node j on the D1 and D0 probes.
  double q_threshold = 0.0;
  double train_acc = 0.0;
};

/// Probe graphs for the alignment monitor: the first D1 and the first D0
/// graph of the dataset.
struct AlignmentProbe {
  Pattern pattern = Pattern::chain({0});
  Graph d1;
  Graph d0;
  std::size_t palette_size = 0;
};
AlignmentProbe default_probe(const PartitionedDataset& ds);

/// Throws InvalidArgument when the model is not theory-mode attention or the
/// D1 probe has no anchor metadata.
AlignmentRecord alignment_record(const ModelParams& m, const ModelParams& previous, const AlignmentProbe& probe,
                                 std::size_t step);

/// Monitor that appends one record per logged step to `sink` and emits the
/// alignment columns.
Monitor alignment_monitor(const AlignmentProbe& probe, std::shared_ptr<std::vector<AlignmentRecord>> sink);

/// Column order of the alignment trace CSV.
const std::vector<std::string>& alignment_columns();
std::string alignment_csv(const std::vector<AlignmentRecord>& records);

struct PreservationSummary {
  /// Number of update steps in the trace (records after the first).
  std::size_t steps = 0;
  /// False when the trace holds no update step; the fractions are then 0.
  bool defined = false;
  /// Steps taken while the previous record's train accuracy was below 1.
  std::size_t steps_before_fit = 0;
  double frac_delta_w_positive = 0.0;
  double frac_delta_w_positive_before_fit = 0.0;
  double frac_full_dominance = 0.0;
  std::optional<std::size_t> first_q_above_threshold;
  bool final_w_aligned = false;
  bool final_a_aligned = false;
};
PreservationSummary preservation_report(const std::vector<AlignmentRecord>& trace);

}  // namespace gnnbias
