#include "gnnbias/experiments.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "gnnbias/error.hpp"

namespace gnnbias {

namespace {

std::string fmt(double v) { return format_cell(Cell{v}); }

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
  return out;
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

std::string label_name(int label) { return label < 0 ? "tie" : std::to_string(label); }

}  // namespace

std::vector<std::pair<std::string, std::string>> ExperimentConfig::snapshot() const {
  return {
      {"learning_rate", fmt(train.learning_rate)},
      {"epochs", std::to_string(train.epochs)},
      {"batch_size", std::to_string(train.batch_size)},
      {"optimizer", std::string(to_string(train.optimizer))},
      {"shuffle", train.shuffle ? "true" : "false"},
      {"width", std::to_string(width)},
      {"init_scale", fmt(init_scale)},
      {"nonlinearity", std::string(to_string(nonlinearity))},
      {"nolinear_nonlinearity", std::string(to_string(nolinear_nonlinearity))},
      {"nolinear_epochs", std::to_string(nolinear_epochs)},
      {"convs", join(convs, [](Conv c) { return std::string(to_string(c)); })},
      {"poolings", join(poolings, [](Pooling p) { return std::string(to_string(p)); })},
      {"beta", fmt(beta)},
      {"min_train_accuracy", fmt(min_train_accuracy)},
  };
}

int LabelCounts::majority() const {
  if (ones > zeros) return 1;
  if (zeros > ones) return 0;
  return -1;
}

LabelCounts count_labels(const ModelParams& m, const std::vector<Graph>& graphs) {
  LabelCounts c;
  for (const Graph& g : graphs) {
    if (predict(g, m) >= 0.5) {
      ++c.ones;
    } else {
      ++c.zeros;
    }
  }
  return c;
}

double accuracy(const ModelParams& m, const std::vector<Graph>& labeled) {
  if (labeled.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Graph& g : labeled) {
    if (!g.label()) throw InvalidArgument("accuracy needs labeled graphs");
    const int yhat = predict(g, m) >= 0.5 ? 1 : 0;
    correct += yhat == *g.label();
  }
  return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

int majority_of(const std::vector<int>& labels) {
  std::size_t ones = 0;
  std::size_t zeros = 0;
  for (int l : labels) {
    ones += l == 1;
    zeros += l == 0;
  }
  return LabelCounts{ones, zeros}.majority();
}

TrainedModel train_model(const std::vector<Graph>& train_set, std::size_t palette_size, Conv conv,
                         Pooling pooling, double beta, bool linear, std::uint64_t seed,
                         const ExperimentConfig& cfg) {
  ModelConfig mc;
  mc.palette_size = palette_size;
  mc.width = cfg.width;
  mc.pooling = pooling;
  mc.beta = beta;
  mc.conv = conv;
  mc.flags.nonlinearity = linear ? cfg.nonlinearity : cfg.nolinear_nonlinearity;
  mc.flags.use_linear_classifier = linear;
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  if (!linear) tc.epochs = cfg.nolinear_epochs;
  const TrainResult r = train(init_params(mc, seed, cfg.init_scale), train_set, tc);
  TrainedModel out{r.params, r.trace.final_eval, false};
  out.flagged = out.train.accuracy < cfg.min_train_accuracy;
  return out;
}

Report run_bias_probe(const PartitionedDataset& ds, const ExperimentConfig& cfg) {
  Report rep;
  rep.experiment = "bias_probe";
  rep.config = cfg.snapshot();
  rep.seeds = cfg.seeds;
  rep.columns = {"conv", "pooling", "seed", "train_loss", "train_acc", "flagged", "dperp_y1", "dperp_y0", "majority"};
  const auto train_set = ds.labeled();
  const auto probe = ds.partition(Partition::dperp);
  for (Conv conv : cfg.convs) {
    for (Pooling pool : cfg.poolings) {
      std::vector<int> majorities;
      std::size_t ones = 0;
      std::size_t zeros = 0;
      for (std::uint64_t seed : cfg.seeds) {
        const auto tm = train_model(train_set, ds.palette_size, conv, pool, cfg.beta, true, seed, cfg);
        const auto c = count_labels(tm.params, probe);
        if (!tm.flagged) {
          majorities.push_back(c.majority());
          ones += c.ones;
          zeros += c.zeros;
        }
        rep.add_row({std::string(to_string(conv)), std::string(to_string(pool)), std::to_string(seed),
                     tm.train.loss, tm.train.accuracy, tm.flagged, as_int(c.ones), as_int(c.zeros),
                     label_name(c.majority())});
      }
      rep.add_row({std::string(to_string(conv)), std::string(to_string(pool)), std::string("all"),
                   std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                   majorities.empty(), as_int(ones), as_int(zeros), label_name(majority_of(majorities))});
    }
  }
  return rep;
}

Report run_generalization(const PartitionedDataset& ds, const std::vector<NamedSet>& tests,
                          const ExperimentConfig& cfg) {
  Report rep;
  rep.experiment = "generalization";
  rep.config = cfg.snapshot();
  rep.seeds = cfg.seeds;
  rep.columns = {"conv", "pooling", "seed", "train_loss", "train_acc", "flagged"};
  for (const auto& t : tests) rep.columns.push_back("test_acc_" + t.name);
  const auto train_set = ds.labeled();
  for (Conv conv : cfg.convs) {
    for (Pooling pool : cfg.poolings) {
      for (std::uint64_t seed : cfg.seeds) {
        const auto tm = train_model(train_set, ds.palette_size, conv, pool, cfg.beta, true, seed, cfg);
        std::vector<Cell> row{std::string(to_string(conv)), std::string(to_string(pool)), std::to_string(seed),
                              tm.train.loss, tm.train.accuracy, tm.flagged};
        for (const auto& t : tests) row.emplace_back(accuracy(tm.params, t.graphs));
        rep.add_row(std::move(row));
      }
    }
  }
  return rep;
}

Report run_beta_sweep(const PartitionedDataset& ds, const std::vector<double>& betas, const ExperimentConfig& cfg) {
  for (double b : betas) {
    if (!(b > 0.0)) throw InvalidArgument("every beta must be positive");
  }
  Report rep;
  rep.experiment = "beta_sweep";
  rep.config = cfg.snapshot();
  rep.config.emplace_back("betas", join(betas, [](double b) { return fmt(b); }));
  rep.seeds = cfg.seeds;
  rep.columns = {"conv", "beta", "seed", "train_loss", "train_acc", "flagged", "dperp_y1", "dperp_y0", "majority"};
  const auto train_set = ds.labeled();
  const auto probe = ds.partition(Partition::dperp);
  for (Conv conv : cfg.convs) {
    for (double beta : betas) {
      std::vector<int> majorities;
      std::size_t ones = 0;
      std::size_t zeros = 0;
      for (std::uint64_t seed : cfg.seeds) {
        const auto tm = train_model(train_set, ds.palette_size, conv, Pooling::attn, beta, true, seed, cfg);
        const auto c = count_labels(tm.params, probe);
        if (!tm.flagged) {
          majorities.push_back(c.majority());
          ones += c.ones;
          zeros += c.zeros;
        }
        rep.add_row({std::string(to_string(conv)), beta, std::to_string(seed), tm.train.loss, tm.train.accuracy,
                     tm.flagged, as_int(c.ones), as_int(c.zeros), label_name(c.majority())});
      }
      rep.add_row({std::string(to_string(conv)), beta, std::string("all"), std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(), majorities.empty(), as_int(ones), as_int(zeros),
                   label_name(majority_of(majorities))});
    }
  }
  return rep;
}

Report run_nolinear_ablation(const PartitionedDataset& ds, const ExperimentConfig& cfg) {
  Report rep;
  rep.experiment = "nolinear_ablation";
  rep.config = cfg.snapshot();
  rep.seeds = cfg.seeds;
  rep.columns = {"conv",      "pooling", "linear",   "seed",     "train_loss", "train_acc",
                 "flagged",   "dperp_y1", "dperp_y0", "majority", "agree"};
  const auto train_set = ds.labeled();
  const auto probe = ds.partition(Partition::dperp);
  for (Conv conv : cfg.convs) {
    for (Pooling pool : cfg.poolings) {
      int variant_majority[2] = {-1, -1};
      std::vector<std::vector<Cell>> summary;
      for (int linear = 1; linear >= 0; --linear) {
        std::vector<int> majorities;
        std::size_t ones = 0;
        std::size_t zeros = 0;
        for (std::uint64_t seed : cfg.seeds) {
          const auto tm = train_model(train_set, ds.palette_size, conv, pool, cfg.beta, linear == 1, seed, cfg);
          const auto c = count_labels(tm.params, probe);
          if (!tm.flagged) {
            majorities.push_back(c.majority());
            ones += c.ones;
            zeros += c.zeros;
          }
          rep.add_row({std::string(to_string(conv)), std::string(to_string(pool)), linear == 1,
                       std::to_string(seed), tm.train.loss, tm.train.accuracy, tm.flagged, as_int(c.ones),
                       as_int(c.zeros), label_name(c.majority()), std::string("")});
        }
        variant_majority[linear] = majority_of(majorities);
        summary.push_back({std::string(to_string(conv)), std::string(to_string(pool)), linear == 1,
                           std::string("all"), std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), majorities.empty(), as_int(ones),
                           as_int(zeros), label_name(variant_majority[linear]), std::string("")});
      }
      const bool agree = variant_majority[0] >= 0 && variant_majority[0] == variant_majority[1];
      for (auto& row : summary) {
        row.back() = std::string(agree ? "true" : "false");
        rep.add_row(std::move(row));
      }
    }
  }
  return rep;
}

TrainConfig default_theory_train_config() {
  TrainConfig tc;
  tc.optimizer = Optimizer::gd;
  tc.batch_size = 0;
  tc.learning_rate = 1.0;
  tc.epochs = 300;
  tc.shuffle = false;
  tc.log_every = 1;
  return tc;
}

AlignmentRun run_alignment(const PartitionedDataset& ds, double beta, const TrainConfig& cfg) {
  AlignmentRun run;
  run.bounds = measure_bounds(ds);
  run.anchor = check_anchor_alignment(ds);
  run.witnesses = check_direction_witnesses(ds);
  const ModelParams init = theory_params(ds.palette_size, Pooling::attn, beta);
  auto sink = std::make_shared<std::vector<AlignmentRecord>>();
  TrainConfig tc = cfg;
  if (tc.log_every == 0) tc.log_every = 1;
  run.result = train(init, ds.labeled(), tc, {alignment_monitor(default_probe(ds), sink)});
  run.records = *sink;
  run.summary = preservation_report(run.records);
  return run;
}

Report alignment_summary_report(const AlignmentRun& run, double beta, const TrainConfig& cfg) {
  Report rep;
  rep.experiment = "alignment_summary";
  rep.config = {{"beta", fmt(beta)},
                {"learning_rate", fmt(cfg.learning_rate)},
                {"epochs", std::to_string(cfg.epochs)},
                {"batch_size", std::to_string(cfg.batch_size)},
                {"optimizer", std::string(to_string(cfg.optimizer))}};
  rep.seeds = {cfg.seed};
  rep.columns = {"quantity", "value"};
  const auto& s = run.summary;
  rep.add_row({std::string("final_train_acc"), run.result.trace.final_eval.accuracy});
  rep.add_row({std::string("final_train_loss"), run.result.trace.final_eval.loss});
  rep.add_row({std::string("steps"), as_int(s.steps)});
  rep.add_row({std::string("steps_before_fit"), as_int(s.steps_before_fit)});
  rep.add_row({std::string("frac_delta_w_positive"), s.frac_delta_w_positive});
  rep.add_row({std::string("frac_delta_w_positive_before_fit"), s.frac_delta_w_positive_before_fit});
  rep.add_row({std::string("frac_full_dominance"), s.frac_full_dominance});
  rep.add_row({std::string("first_q_above_threshold"),
               s.first_q_above_threshold ? Cell{as_int(*s.first_q_above_threshold)} : Cell{std::string("none")}});
  rep.add_row({std::string("final_w_aligned"), s.final_w_aligned});
  rep.add_row({std::string("final_a_aligned"), s.final_a_aligned});
  rep.add_row({std::string("theta"), run.bounds.theta});
  rep.add_row({std::string("theta_d"), run.bounds.theta_d});
  rep.add_row({std::string("anchor_positive"), as_int(run.anchor.positive)});
  rep.add_row({std::string("anchor_covers_pattern"), as_int(run.anchor.covers_pattern)});
  rep.add_row({std::string("anchor_d1_graphs"), as_int(run.anchor.d1_graphs)});
  rep.add_row({std::string("direction_witnesses_found"), run.witnesses.passed()});
  return rep;
}

Report search_report(const SearchResult& r) {
  Report rep;
  rep.experiment = "subgraph_search";
  rep.config = {{"k", std::to_string(r.k)},
                {"d1_graphs", std::to_string(r.d1_graphs)},
                {"d0_graphs", std::to_string(r.d0_graphs)}};
  rep.columns = {"size", "colors", "edges", "d1_coverage", "d0_coverage"};
  for (const auto& h : r.hits) {
    std::string colors = join(h.subgraph.colors, [](Color c) { return std::to_string(c); });
    std::string edges = join(h.subgraph.edges(), [](const Edge& e) {
      return std::to_string(e.first) + "-" + std::to_string(e.second);
    });
    rep.add_row({as_int(h.subgraph.size()), colors, edges, h.d1_coverage, h.d0_coverage});
  }
  return rep;
}

Report verification_report(const VerificationReport& v) {
  Report rep;
  rep.experiment = "verify";
  rep.columns = {"check", "value"};
  rep.add_row({std::string("d1"), as_int(v.d1)});
  rep.add_row({std::string("d0"), as_int(v.d0)});
  rep.add_row({std::string("dperp"), as_int(v.dperp)});
  rep.add_row({std::string("mismatches"), as_int(v.mismatches.size())});
  rep.add_row({std::string("parity_ok"), v.parity_ok});
  rep.add_row({std::string("label_violations"), as_int(v.label_violations)});
  rep.add_row({std::string("palette_violations"), as_int(v.palette_violations)});
  for (std::size_t c = 0; c < v.color_counts.size(); ++c) {
    rep.add_row({"color_" + std::to_string(c) + "_nodes", as_int(v.color_counts[c])});
  }
  for (const auto& m : v.mismatches) {
    rep.add_row({"mismatch_" + std::to_string(m.index),
                 std::string(to_string(m.tagged)) + "->" + std::string(to_string(m.actual))});
  }
  rep.add_row({std::string("ok"), v.ok()});
  return rep;
}

Report grad_check_report(const GradCheckReport& r, const ModelParams& m) {
  Report rep;
  rep.experiment = "grad_check";
  rep.config = {{"conv", std::string(to_string(m.conv))},
                {"pooling", std::string(to_string(m.pooling))},
                {"beta", fmt(m.beta)},
                {"theory_mode", m.flags.theory_mode ? "true" : "false"},
                {"tolerance", fmt(r.tolerance)},
                {"graphs", std::to_string(r.graphs)}};
  rep.columns = {"group", "finite_diff_rel_err", "closed_form_rel_err", "passed"};
  for (const auto& g : r.groups) {
    const double worst = std::max(g.finite_diff, g.closed_form.value_or(0.0));
    rep.add_row({std::string(to_string(g.group)), g.finite_diff,
                 g.closed_form ? Cell{*g.closed_form} : Cell{std::string("")}, worst < r.tolerance});
  }
  return rep;
}

}  // namespace gnnbias
