#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnnbias/dataset.hpp"
#include "gnnbias/model.hpp"
#include "gnnbias/report.hpp"
#include "gnnbias/subgraph.hpp"
#include "gnnbias/theory.hpp"
#include "gnnbias/training.hpp"

namespace gnnbias {

/// Shared settings of the training experiments.
struct ExperimentConfig {
  TrainConfig train;
  std::size_t width = 16;
  double init_scale = 0.1;
  Nonlinearity nonlinearity = Nonlinearity::relu;
  /// Nonlinearity of the variant without the linear classifier, whose
  /// scalar output must take both signs.
  Nonlinearity nolinear_nonlinearity = Nonlinearity::identity;
  /// Epochs for the classifier-free variant. Its readout has one column, so
  /// it converges far slower than the full model at the same learning rate.
  std::size_t nolinear_epochs = 2000;
  std::vector<Conv> convs{Conv::gcn};
  std::vector<Pooling> poolings{Pooling::max, Pooling::avg, Pooling::attn};
  double beta = 1.0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  /// Rows whose final train accuracy is below this are flagged.
  double min_train_accuracy = 0.97;

  /// Ordered snapshot for report headers.
  std::vector<std::pair<std::string, std::string>> snapshot() const;
};

/// Label counts of a trained model on the unlabeled probe set.
struct LabelCounts {
  std::size_t ones = 0;
  std::size_t zeros = 0;

  /// 1 or 0 for a strict majority, -1 on a tie (including the empty set).
  int majority() const;
};
LabelCounts count_labels(const ModelParams& m, const std::vector<Graph>& graphs);
double accuracy(const ModelParams& m, const std::vector<Graph>& labeled);

/// Majority of the per-seed majority labels, ignoring ties. -1 when no
/// label has a strict majority.
int majority_of(const std::vector<int>& labels);

/// One trained model of an experiment grid.
struct TrainedModel {
  ModelParams params;
  Evaluation train;
  bool flagged = false;
};
TrainedModel train_model(const std::vector<Graph>& train_set, std::size_t palette_size, Conv conv,
                         Pooling pooling, double beta, bool linear, std::uint64_t seed,
                         const ExperimentConfig& cfg);

/// Bias probe: per (conv, pooling, seed) the D-perp label counts, followed by
/// one summary row per (conv, pooling) with seed "all" holding the majority
/// of per-seed majorities over unflagged rows.
Report run_bias_probe(const PartitionedDataset& ds, const ExperimentConfig& cfg);

struct NamedSet {
  std::string name;
  std::vector<Graph> graphs;
};
/// Train on D1 + D0, report train loss/accuracy and accuracy on each test set.
Report run_generalization(const PartitionedDataset& ds, const std::vector<NamedSet>& tests,
                          const ExperimentConfig& cfg);

/// Attention pooling at each temperature, with identical training budgets.
/// As in the bias probe, the "all" rows skip flagged runs.
Report run_beta_sweep(const PartitionedDataset& ds, const std::vector<double>& betas, const ExperimentConfig& cfg);

/// Each pooling kind with and without the linear classifier; summary rows
/// carry the majority label of both variants and their agreement.
Report run_nolinear_ablation(const PartitionedDataset& ds, const ExperimentConfig& cfg);

/// Alignment trace of a theory-mode attention model.
struct AlignmentRun {
  TrainResult result;
  std::vector<AlignmentRecord> records;
  PreservationSummary summary;
  TheoryBounds bounds;
  AnchorAlignment anchor;
  DirectionWitnesses witnesses;
};
/// Theory-mode training with full-batch gradient descent by default.
TrainConfig default_theory_train_config();
AlignmentRun run_alignment(const PartitionedDataset& ds, double beta, const TrainConfig& cfg);
Report alignment_summary_report(const AlignmentRun& run, double beta, const TrainConfig& cfg);

Report search_report(const SearchResult& r);
Report verification_report(const VerificationReport& v);
Report grad_check_report(const GradCheckReport& r, const ModelParams& m);

}  // namespace gnnbias
