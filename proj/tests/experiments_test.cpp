#include <gtest/gtest.h>

#include <map>
#include <set>
#include <string>

#include "gnnbias/error.hpp"
#include "gnnbias/experiments.hpp"

using namespace gnnbias;

namespace {

const PartitionedDataset& tiny_grid() {
  static const PartitionedDataset ds = [] {
    SynthSpec s;
    s.rows = 5;
    s.cols = 5;
    s.per_partition_count = 16;
    s.dperp_count = 10;
    s.seed = 4;
    return synth_grid_partition(s);
  }();
  return ds;
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.train.epochs = 3;
  cfg.nolinear_epochs = 3;
  cfg.width = 4;
  cfg.seeds = {0, 1};
  cfg.poolings = {Pooling::avg, Pooling::attn};
  return cfg;
}

std::int64_t int_at(const Report& r, std::size_t row, const char* col) { return std::get<std::int64_t>(r.at(row, col)); }

}  // namespace

TEST(Labels, MajorityRules) {
  EXPECT_EQ((LabelCounts{3, 1}).majority(), 1);
  EXPECT_EQ((LabelCounts{1, 3}).majority(), 0);
  EXPECT_EQ((LabelCounts{2, 2}).majority(), -1);
  EXPECT_EQ((LabelCounts{0, 0}).majority(), -1);
  EXPECT_EQ(majority_of({1, 0, 1}), 1);
  EXPECT_EQ(majority_of({0, -1, 0}), 0);
  EXPECT_EQ(majority_of({1, 0, -1}), -1);
  EXPECT_EQ(majority_of({}), -1);
}

TEST(BiasProbe, CountsSumToProbeSizeAndSummaryFollowsSeeds) {
  const auto& ds = tiny_grid();
  const ExperimentConfig cfg = quick_config();
  const Report r = run_bias_probe(ds, cfg);
  // Two poolings, each with two seed rows and one summary row.
  ASSERT_EQ(r.rows.size(), 6u);
  const auto dperp = static_cast<std::int64_t>(ds.count(Partition::dperp));
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto seed = std::get<std::string>(r.at(i, "seed"));
    if (seed == "all") continue;
    EXPECT_EQ(int_at(r, i, "dperp_y1") + int_at(r, i, "dperp_y0"), dperp);
  }
  for (std::size_t base : {0u, 3u}) {
    std::int64_t ones = 0;
    std::int64_t zeros = 0;
    for (std::size_t i = base; i < base + 2; ++i) {
      if (std::get<bool>(r.at(i, "flagged"))) continue;
      ones += int_at(r, i, "dperp_y1");
      zeros += int_at(r, i, "dperp_y0");
    }
    EXPECT_EQ(int_at(r, base + 2, "dperp_y1"), ones);
    EXPECT_EQ(int_at(r, base + 2, "dperp_y0"), zeros);
  }
}

TEST(BiasProbe, FlaggedRowsAreExcludedFromSummary) {
  ExperimentConfig cfg = quick_config();
  cfg.min_train_accuracy = 1.1;  // nothing can reach this
  const Report r = run_bias_probe(tiny_grid(), cfg);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_TRUE(std::get<bool>(r.at(i, "flagged")));
    if (std::get<std::string>(r.at(i, "seed")) == "all") {
      EXPECT_EQ(int_at(r, i, "dperp_y1") + int_at(r, i, "dperp_y0"), 0);
      EXPECT_EQ(std::get<std::string>(r.at(i, "majority")), "tie");
    }
  }
}

TEST(Experiments, ReportsAreByteIdenticalOnRerun) {
  const auto& ds = tiny_grid();
  const ExperimentConfig cfg = quick_config();
  EXPECT_EQ(to_csv(run_bias_probe(ds, cfg)), to_csv(run_bias_probe(ds, cfg)));
  EXPECT_EQ(to_csv(run_beta_sweep(ds, {1.0, 50.0}, cfg)), to_csv(run_beta_sweep(ds, {1.0, 50.0}, cfg)));
  EXPECT_EQ(to_json(run_nolinear_ablation(ds, cfg)), to_json(run_nolinear_ablation(ds, cfg)));
}

TEST(Experiments, GeneralizationAddsOneColumnPerTestSet) {
  const auto& ds = tiny_grid();
  ExperimentConfig cfg = quick_config();
  cfg.poolings = {Pooling::max};
  const std::vector<NamedSet> tests{{"self", ds.labeled()}, {"d1", ds.partition(Partition::d1)}};
  const Report r = run_generalization(ds, tests, cfg);
  EXPECT_EQ(r.columns.back(), "test_acc_d1");
  ASSERT_EQ(r.rows.size(), 2u);
  // Evaluating on the training set reproduces the training accuracy.
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(std::get<double>(r.at(i, "test_acc_self")), std::get<double>(r.at(i, "train_acc")));
}

TEST(Experiments, BetaSweepRejectsNonPositiveTemperatures) {
  EXPECT_THROW(run_beta_sweep(tiny_grid(), {1.0, 0.0}, quick_config()), InvalidArgument);
}

TEST(Experiments, AblationPairsBothVariants) {
  const Report r = run_nolinear_ablation(tiny_grid(), quick_config());
  // One summary per pooling and classifier variant; both rows of a pair
  // carry the same agreement verdict.
  std::map<std::string, std::set<std::string>> agree;
  std::size_t summaries = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (std::get<std::string>(r.at(i, "seed")) != "all") continue;
    ++summaries;
    agree[std::get<std::string>(r.at(i, "pooling"))].insert(std::get<std::string>(r.at(i, "agree")));
  }
  EXPECT_EQ(summaries, 4u);
  ASSERT_EQ(agree.size(), 2u);
  for (const auto& [pool, verdicts] : agree) EXPECT_EQ(verdicts.size(), 1u) << pool;
}

TEST(Experiments, AlignmentRunProducesOneRecordPerStep) {
  TrainConfig tc = default_theory_train_config();
  tc.epochs = 5;
  const AlignmentRun run = run_alignment(tiny_grid(), 1.0, tc);
  EXPECT_EQ(run.records.size(), 6u);
  EXPECT_EQ(run.summary.steps, 5u);
  EXPECT_TRUE(run.anchor.passed());
  const Report s = alignment_summary_report(run, 1.0, tc);
  EXPECT_EQ(s.columns, (std::vector<std::string>{"quantity", "value"}));
}
