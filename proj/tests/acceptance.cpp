// End-to-end acceptance checks. Prints one line per criterion and exits
// non-zero if any criterion fails. Thresholds are fixed below and are not
// configurable from the command line; `--only N` runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gnnbias/dataset.hpp"
#include "gnnbias/experiments.hpp"
#include "gnnbias/subgraph.hpp"
#include "gnnbias/theory.hpp"
#include "gnnbias/training.hpp"

using namespace gnnbias;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr double kClosedFormTol = 1e-10;
constexpr double kMaxTieGap = 1e-3;
constexpr double kBiasFraction = 0.90;
constexpr double kHighTestAcc = 0.90;
constexpr double kAvgTestAccCeiling = 0.75;
constexpr double kDeltaWFraction = 0.95;

constexpr double kBudgetGrad = 30;
constexpr double kBudgetClosedForm = 10;
constexpr double kBudgetBias = 600;
constexpr double kBudgetGeneralize = 900;
constexpr double kBudgetSweep = 900;
constexpr double kBudgetAblation = 600;
constexpr double kBudgetAlignment = 300;
constexpr double kBudgetSearch = 120;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const PartitionedDataset& grid12() {
  static const PartitionedDataset ds = [] {
    SynthSpec s;  // 12x12, 4 background colors, chain of 3, 144 per side
    s.seed = 0;
    return synth_grid_partition(s);
  }();
  return ds;
}

ExperimentConfig base_config() { return ExperimentConfig{}; }

// Reports produced by criteria 3-8, kept for the determinism rerun.
std::map<std::string, std::string> g_reports;
std::map<std::string, std::function<std::string()>> g_rerun;

void remember(const std::string& name, const std::function<std::string()>& produce, const std::string& first) {
  g_reports[name] = first;
  g_rerun[name] = produce;
}

std::vector<Graph> random_graphs(std::mt19937_64& rng, std::size_t count, std::size_t palette) {
  std::vector<Color> pal(palette);
  for (std::size_t c = 0; c < palette; ++c) pal[c] = c;
  std::uniform_int_distribution<std::size_t> size(2, 16);
  std::vector<Graph> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_host_graph(size(rng), 0.2, pal, rng));
  return out;
}

ModelParams checked_model(Conv conv, Pooling pool, double beta, std::uint64_t seed) {
  ModelConfig mc;
  mc.palette_size = 7;
  mc.width = 8;
  mc.conv = conv;
  mc.pooling = pool;
  mc.beta = beta;
  mc.flags.nonlinearity = Nonlinearity::sigmoid;
  return init_params(mc, seed, 0.5);
}

// Smallest gap between a coordinate's max and the next value that belongs to
// a different node representation.
double max_tie_gap(const Graph& g, const ModelParams& m) {
  const Matrix h = node_reps(g, m);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < h.cols(); ++c) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < h.rows(); ++i) top = std::max(top, h(i, c));
    for (std::size_t i = 0; i < h.rows(); ++i) {
      const double d = top - h(i, c);
      if (d > 1e-12) gap = std::min(gap, d);
    }
  }
  return gap;
}

Outcome criterion_gradients() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  std::size_t checks = 0;
  bool ok = true;
  for (Conv conv : {Conv::gcn, Conv::gat}) {
    const auto graphs = random_graphs(rng, 20, 7);
    std::vector<std::pair<Pooling, double>> cases{{Pooling::sum, 1.0}, {Pooling::avg, 1.0}, {Pooling::attn, 0.5},
                                                  {Pooling::attn, 1.0}, {Pooling::attn, 4.0}};
    for (const auto& [pool, beta] : cases) {
      const auto rep = grad_check(checked_model(conv, pool, beta, rng()), graphs, kGradTol);
      worst = std::max(worst, rep.max_error());
      ok = ok && rep.passed;
      ++checks;
    }
    // MAX: keep drawing graphs until 20 are clear of near-ties.
    const ModelParams mx = checked_model(conv, Pooling::max, 1.0, rng());
    std::vector<Graph> clear;
    for (int attempt = 0; attempt < 2000 && clear.size() < 20; ++attempt) {
      auto g = random_graphs(rng, 1, 7).front();
      if (max_tie_gap(g, mx) > kMaxTieGap) clear.push_back(std::move(g));
    }
    const auto rep = grad_check(mx, clear, kGradTol);
    worst = std::max(worst, rep.max_error());
    ok = ok && rep.passed && clear.size() == 20;
    ++checks;
  }
  return {ok, std::to_string(checks) + " configurations x 20 graphs, max rel err " + fmt("%.3g", worst)};
}

Outcome criterion_closed_form() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_real_distribution<double> b(0.25, 4.0);
  double worst = 0.0;
  const auto graphs = random_graphs(rng, 50, 7);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    ModelParams m = theory_params(7, Pooling::attn, b(rng));
    for (double& x : m.attn.values()) x = u(rng);
    for (double& x : m.classifier.values()) x = u(rng);
    const int y = static_cast<int>(i % 2);
    const auto cf = closed_form_grads(graphs[i], y, m);
    const auto ad = sample_gradients(m, prepare_inputs(graphs[i], m), y);
    worst = std::max({worst, relative_error(cf.dw, ad[ParamGroup::classifier]), relative_error(cf.da, ad[ParamGroup::attn])});
  }
  bool zero_ok = true;
  for (const Graph& g : graphs) {
    const ModelParams m = theory_params(7);
    const auto ad = sample_gradients(m, prepare_inputs(g, m), 1);
    for (double x : ad[ParamGroup::attn].values()) zero_ok = zero_ok && x == 0.0;
    const Matrix reps = node_reps(g, m);
    const Matrix alpha = attention_weights(reps, m);
    const double inv_n = 1.0 / static_cast<double>(reps.rows());
    for (double a : alpha.values()) zero_ok = zero_ok && a == inv_n;
    const Matrix vhat = pool(reps, m);
    for (std::size_t c = 0; c < reps.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < reps.rows(); ++i) acc += inv_n * reps(i, c);
      zero_ok = zero_ok && vhat[c] == acc;
    }
  }
  return {worst < kClosedFormTol && zero_ok,
          "50 instances, max rel err " + fmt("%.3g", worst) + (zero_ok ? ", zero-init exact" : ", zero-init mismatch")};
}

struct Summary {
  std::size_t ones = 0;
  std::size_t zeros = 0;
  std::string majority;
  std::size_t unflagged = 0;
  double frac_ones() const { return ones + zeros ? static_cast<double>(ones) / static_cast<double>(ones + zeros) : 0.0; }
};

// Collects the "all" row and the unflagged seed count for one key.
Summary summarize(const Report& r, const std::string& key_col, const std::string& key) {
  Summary s;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (format_cell(r.at(i, key_col)) != key) continue;
    const auto seed = std::get<std::string>(r.at(i, "seed"));
    if (seed == "all") {
      s.ones = static_cast<std::size_t>(std::get<std::int64_t>(r.at(i, "dperp_y1")));
      s.zeros = static_cast<std::size_t>(std::get<std::int64_t>(r.at(i, "dperp_y0")));
      s.majority = std::get<std::string>(r.at(i, "majority"));
    } else if (!std::get<bool>(r.at(i, "flagged"))) {
      ++s.unflagged;
    }
  }
  return s;
}

Outcome criterion_bias() {
  ExperimentConfig cfg = base_config();
  cfg.poolings = {Pooling::avg, Pooling::attn};
  auto produce = [cfg] { return to_csv(run_bias_probe(grid12(), cfg)); };
  const Report r = run_bias_probe(grid12(), cfg);
  remember("bias_probe", produce, to_csv(r));
  const Summary avg = summarize(r, "pooling", "avg");
  const Summary attn = summarize(r, "pooling", "attn");
  const bool ok = avg.unflagged >= 2 && attn.unflagged >= 2 && avg.majority == "1" && attn.majority == "0" &&
                  avg.frac_ones() >= kBiasFraction && 1.0 - attn.frac_ones() >= kBiasFraction;
  return {ok, "AVG y=1 on " + fmt("%.3f", avg.frac_ones()) + " of D-perp (" + std::to_string(avg.unflagged) +
                  "/3 seeds trained), ATTN y=0 on " + fmt("%.3f", 1.0 - attn.frac_ones()) + " (" +
                  std::to_string(attn.unflagged) + "/3 seeds trained)"};
}

Outcome criterion_generalization() {
  SynthSpec t;
  t.rows = t.cols = 13;
  t.seed = 1013;
  t.dperp_count = 1;
  const std::vector<NamedSet> tests{{"13x13", synth_grid_partition(t).labeled()}};
  const ExperimentConfig cfg = base_config();
  auto produce = [cfg, tests] { return to_csv(run_generalization(grid12(), tests, cfg)); };
  const Report r = run_generalization(grid12(), tests, cfg);
  remember("generalization", produce, to_csv(r));

  bool ok = true;
  std::string detail;
  for (const char* pool : {"max", "avg", "attn"}) {
    std::size_t good = 0;
    std::size_t unflagged = 0;
    std::string accs;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (std::get<std::string>(r.at(i, "pooling")) != pool) continue;
      const double acc = std::get<double>(r.at(i, "test_acc_13x13"));
      accs += (accs.empty() ? "" : "/") + fmt("%.3f", acc);
      if (std::get<bool>(r.at(i, "flagged"))) continue;
      ++unflagged;
      const bool want_low = std::string(pool) == "avg";
      good += want_low ? acc <= kAvgTestAccCeiling : acc >= kHighTestAcc;
    }
    const bool pass = unflagged >= 2 && 2 * good > unflagged;
    ok = ok && pass;
    detail += std::string(detail.empty() ? "" : ", ") + pool + " " + accs + (pass ? "" : " [miss]");
  }
  return {ok, "13x13 test acc per seed: " + detail};
}

Outcome criterion_beta_sweep() {
  const ExperimentConfig cfg = base_config();
  const std::vector<double> betas{1, 4, 10, 300};
  auto produce = [cfg, betas] { return to_csv(run_beta_sweep(grid12(), betas, cfg)); };
  const Report r = run_beta_sweep(grid12(), betas, cfg);
  remember("beta_sweep", produce, to_csv(r));
  bool ok = true;
  std::string detail;
  for (double beta : betas) {
    const Summary s = summarize(r, "beta", format_cell(beta));
    const std::string want = beta == 300 ? "1" : "0";
    ok = ok && s.majority == want;
    detail += std::string(detail.empty() ? "" : ", ") + "beta " + format_cell(beta) + ": " + std::to_string(s.zeros) +
              "/" + std::to_string(s.ones) + " -> " + s.majority;
  }
  return {ok, "y0/y1 " + detail};
}

Outcome criterion_ablation() {
  const ExperimentConfig cfg = base_config();
  auto produce = [cfg] { return to_csv(run_nolinear_ablation(grid12(), cfg)); };
  const Report r = run_nolinear_ablation(grid12(), cfg);
  remember("nolinear_ablation", produce, to_csv(r));
  bool ok = true;
  std::string detail;
  for (const char* pool : {"max", "avg", "attn"}) {
    std::string with;
    std::string without;
    bool agree = false;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (std::get<std::string>(r.at(i, "pooling")) != pool || std::get<std::string>(r.at(i, "seed")) != "all") continue;
      (std::get<bool>(r.at(i, "linear")) ? with : without) = std::get<std::string>(r.at(i, "majority"));
      agree = std::get<std::string>(r.at(i, "agree")) == "true";
    }
    ok = ok && agree;
    detail += std::string(detail.empty() ? "" : ", ") + pool + " " + with + "/" + without;
  }
  return {ok, "majority with/without classifier: " + detail};
}

Outcome criterion_alignment() {
  const TrainConfig tc = default_theory_train_config();
  auto produce = [tc] { return alignment_csv(run_alignment(grid12(), 1.0, tc).records); };
  const AlignmentRun run = run_alignment(grid12(), 1.0, tc);
  remember("alignment_trace", produce, alignment_csv(run.records));
  const auto& s = run.summary;
  const bool ok = s.final_w_aligned && s.final_a_aligned && s.steps_before_fit > 0 &&
                  s.frac_delta_w_positive_before_fit >= kDeltaWFraction && run.anchor.passed() &&
                  run.bounds.theta_d >= run.bounds.theta;
  const auto& last = run.records.back();
  return {ok, "<w,v*>=" + fmt("%.4g", last.dot_w_vstar) + " <a,v*>=" + fmt("%.4g", last.dot_a_vstar) +
                  ", dw.v*>0 on " + fmt("%.3f", s.frac_delta_w_positive_before_fit) + " of " +
                  std::to_string(s.steps_before_fit) + " pre-fit steps, anchor " + std::to_string(run.anchor.positive) +
                  "/" + std::to_string(run.anchor.d1_graphs) + ", theta_d=" + fmt("%g", run.bounds.theta_d) +
                  " theta=" + fmt("%g", run.bounds.theta) + ", final acc " +
                  fmt("%.3f", run.result.trace.final_eval.accuracy)};
}

Outcome criterion_search() {
  SynthSpec spec;
  spec.rows = spec.cols = 6;
  spec.per_partition_count = 36;
  spec.seed = 0;
  auto produce = [spec] {
    const auto ds = synth_grid_partition(spec);
    return to_csv(search_report(exhaustive_search(ds.partition(Partition::d1), ds.partition(Partition::d0), 3)));
  };
  const auto ds = synth_grid_partition(spec);
  const auto r = exhaustive_search(ds.partition(Partition::d1), ds.partition(Partition::d0), 3);
  remember("search", produce, to_csv(search_report(r)));
  const bool ok = r.hits.size() == 1 && r.hits[0].subgraph == canonicalize(ds.pattern) &&
                  r.hits[0].d1_coverage == 1.0 && r.hits[0].d0_coverage == 0.0;
  return {ok, std::to_string(r.hits.size()) + " discriminative subgraph(s), planted chain " +
                  (ok ? "recovered alone" : "not recovered alone")};
}

Outcome criterion_determinism() {
  if (g_reports.empty()) return {false, "no reports were produced"};
  std::size_t same = 0;
  std::string differing;
  for (const auto& [name, first] : g_reports) {
    if (g_rerun[name]() == first) {
      ++same;
    } else {
      differing += " " + name;
    }
  }
  return {same == g_reports.size(),
          std::to_string(same) + "/" + std::to_string(g_reports.size()) + " reports byte-identical on rerun" +
              (differing.empty() ? "" : " (differs:" + differing + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") only = std::atoi(argv[i + 1]);
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", kBudgetGrad, criterion_gradients},
      {2, "closed-form gradients", kBudgetClosedForm, criterion_closed_form},
      {3, "pooling bias on unlabeled graphs", kBudgetBias, criterion_bias},
      {4, "generalization to 13x13 grids", kBudgetGeneralize, criterion_generalization},
      {5, "temperature sweep flips the bias", kBudgetSweep, criterion_beta_sweep},
      {6, "bias survives removing the classifier", kBudgetAblation, criterion_ablation},
      {7, "alignment monitors", kBudgetAlignment, criterion_alignment},
      {8, "subgraph search recovers the pattern", kBudgetSearch, criterion_search},
      {9, "determinism", 0.0, criterion_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only && *only != c.id) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    bool pass = o.pass;
    if (c.budget_s > 0 && secs > c.budget_s) {
      pass = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    failures += !pass;
    std::printf("criterion %d: %s  %s: %s (%.1f s)\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
