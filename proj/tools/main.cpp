// gnnbias command line front end.
//
// Every subcommand writes its reports under --out and echoes the main table
// to stdout. Options may also come from a plain key=value file given with
// --config; values on the command line take precedence.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gnnbias/dataset.hpp"
#include "gnnbias/error.hpp"
#include "gnnbias/experiments.hpp"
#include "gnnbias/graph_io.hpp"
#include "gnnbias/subgraph.hpp"
#include "gnnbias/theory.hpp"
#include "gnnbias/training.hpp"

namespace fs = std::filesystem;
using namespace gnnbias;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// Thrown by subcommands whose check ran fine but reported a failure.
struct CheckFailed {};

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string format = "csv";

  ReportFormat report_format() const { return report_format_from_string(format); }
};

struct DataOptions {
  std::string data;
  std::size_t rows = 12;
  std::size_t cols = 12;
  std::size_t bg_colors = 4;
  std::string pattern = "chain";
  std::size_t pattern_size = 3;
  std::size_t count = 144;
  std::optional<std::size_t> dperp_count;
  std::size_t retry_budget = 100;
};

struct TrainOptions {
  double lr = 0.001;
  std::size_t epochs = 100;
  std::size_t batch = 4;
  std::string optimizer = "adam";
  std::size_t width = 16;
  double init_scale = 0.1;
  std::string nonlinearity = "relu";
  std::string nolinear_nonlinearity = "identity";
  std::size_t nolinear_epochs = 2000;
  std::vector<std::string> convs{"gcn"};
  std::vector<std::string> poolings{"max", "avg", "attn"};
  double beta = 1.0;
  std::size_t num_seeds = 3;
  double min_train_acc = 0.97;
};

// Reads key=value lines; '#' starts a comment. Underscores in keys are
// accepted as hyphens.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::optional<std::string> find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

bool has_long_option(const CLI::App& app, const std::string& key) {
  for (const CLI::Option* opt : app.get_options()) {
    for (const auto& name : opt->get_lnames()) {
      if (name == key) return true;
    }
  }
  return false;
}

// Splices config entries into the argument list so that CLI11 parses them
// like ordinary options. Root options go before the subcommand, subcommand
// options right after it, and explicit arguments follow both so that they
// win under the take-last policy.
std::vector<std::string> inject_config(const CLI::App& app, std::vector<std::string> args) {
  const auto path = find_config_arg(args);
  if (!path) return args;
  const auto entries = read_config(*path);

  std::size_t sub_pos = args.size();
  const CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    for (const CLI::App* s : app.get_subcommands({})) {
      if (s->get_name() == args[i]) {
        sub_pos = i;
        sub = s;
        break;
      }
    }
    if (sub) break;
  }

  std::vector<std::string> root_args;
  std::vector<std::string> sub_args;
  for (const auto& [key, value] : entries) {
    if (key == "config") continue;
    const std::string arg = "--" + key + "=" + value;
    if (sub && has_long_option(*sub, key)) {
      sub_args.push_back(arg);
    } else if (has_long_option(app, key)) {
      root_args.push_back(arg);
    } else if (!sub) {
      throw ParseError(*path + ": unknown key '" + key + "'");
    }
    // Keys meant for other subcommands are ignored so one file can serve
    // several commands.
  }

  std::vector<std::string> out(root_args);
  out.insert(out.end(), args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos));
  if (sub) {
    out.push_back(args[sub_pos]);
    out.insert(out.end(), sub_args.begin(), sub_args.end());
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, args.end());
  }
  return out;
}

void add_data_options(CLI::App* app, DataOptions& d, bool with_data_dir = true) {
  if (with_data_dir) app->add_option("--data", d.data, "Dataset directory (synthesized when omitted)");
  app->add_option("--rows", d.rows, "Grid rows")->check(CLI::PositiveNumber);
  app->add_option("--cols", d.cols, "Grid columns")->check(CLI::PositiveNumber);
  app->add_option("--bg-colors", d.bg_colors, "Background palette size")->check(CLI::PositiveNumber);
  app->add_option("--pattern", d.pattern, "Pattern shape")->check(CLI::IsMember({"chain", "star"}));
  app->add_option("--pattern-size", d.pattern_size, "Pattern node count");
  app->add_option("--count", d.count, "Graphs per labeled partition")->check(CLI::PositiveNumber);
  app->add_option("--dperp-count", d.dperp_count, "Size of the unlabeled partition");
  app->add_option("--retry-budget", d.retry_budget, "Draws per sample before giving up");
}

void add_train_options(CLI::App* app, TrainOptions& t) {
  app->add_option("--lr", t.lr, "Learning rate");
  app->add_option("--epochs", t.epochs, "Training epochs")->check(CLI::PositiveNumber);
  app->add_option("--batch", t.batch, "Minibatch size (0 = full batch)");
  app->add_option("--optimizer", t.optimizer, "Optimizer")->check(CLI::IsMember({"gd", "adam"}));
  app->add_option("--width", t.width, "Hidden width")->check(CLI::PositiveNumber);
  app->add_option("--init-scale", t.init_scale, "Uniform initialization half-width");
  app->add_option("--nonlinearity", t.nonlinearity, "Activation")
      ->check(CLI::IsMember({"relu", "sigmoid", "identity"}));
  app->add_option("--min-train-acc", t.min_train_acc, "Flag runs below this train accuracy");
  app->add_option("--num-seeds", t.num_seeds, "Model seeds per configuration")->check(CLI::PositiveNumber);
}

void add_grid_options(CLI::App* app, TrainOptions& t) {
  app->add_option("--convs", t.convs, "Convolution kinds")->delimiter(',')->check(CLI::IsMember({"gcn", "gat"}));
  app->add_option("--poolings", t.poolings, "Pooling kinds")
      ->delimiter(',')
      ->check(CLI::IsMember({"max", "avg", "sum", "attn"}));
  app->add_option("--beta", t.beta, "Attention temperature")->check(CLI::PositiveNumber);
}

SynthSpec synth_spec(const DataOptions& d, std::uint64_t seed) {
  SynthSpec s;
  s.rows = d.rows;
  s.cols = d.cols;
  s.bg_colors = d.bg_colors;
  s.pattern_kind = pattern_kind_from_string(d.pattern);
  s.pattern_size = d.pattern_size;
  s.per_partition_count = d.count;
  s.dperp_count = d.dperp_count;
  s.seed = seed;
  s.retry_budget = d.retry_budget;
  return s;
}

PartitionedDataset obtain_dataset(const DataOptions& d, std::uint64_t seed) {
  if (!d.data.empty()) return load_dataset(d.data);
  return synth_grid_partition(synth_spec(d, seed));
}

ExperimentConfig experiment_config(const TrainOptions& t, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.train.learning_rate = t.lr;
  cfg.train.epochs = t.epochs;
  cfg.train.batch_size = t.batch;
  cfg.train.optimizer = optimizer_from_string(t.optimizer);
  cfg.width = t.width;
  cfg.init_scale = t.init_scale;
  cfg.nonlinearity = nonlinearity_from_string(t.nonlinearity);
  cfg.nolinear_nonlinearity = nonlinearity_from_string(t.nolinear_nonlinearity);
  cfg.nolinear_epochs = t.nolinear_epochs;
  cfg.convs.clear();
  for (const auto& c : t.convs) cfg.convs.push_back(conv_from_string(c));
  cfg.poolings.clear();
  for (const auto& p : t.poolings) cfg.poolings.push_back(pooling_from_string(p));
  cfg.beta = t.beta;
  cfg.min_train_accuracy = t.min_train_acc;
  cfg.seeds.clear();
  for (std::size_t i = 0; i < t.num_seeds; ++i) cfg.seeds.push_back(seed + i);
  return cfg;
}

void publish(const Report& r, const GlobalOptions& g, const std::string& stem) {
  const ReportFormat f = g.report_format();
  emit_report(r, f, fs::path(g.out) / (stem + "." + std::string(to_string(f))));
  std::cout << render(r, f);
}

std::vector<double> parse_doubles(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + s + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic planted-pattern datasets and pooling bias experiments for one-layer GNNs", "gnnbias"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GlobalOptions g;
  app.add_option("--config", g.config, "Plain-text key=value option file");
  app.add_option("--seed", g.seed, "Base seed for data and models");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  app.fallthrough();

  // gen-grid
  DataOptions gen_data;
  auto* gen = app.add_subcommand("gen-grid", "Synthesize the grid dataset into --out");
  add_data_options(gen, gen_data, false);

  // plant-host
  std::string hosts_path;
  std::size_t num_hosts = 50;
  std::size_t host_nodes = 20;
  double edge_prob = 0.1;
  std::size_t host_colors = 4;
  std::string host_pattern = "chain";
  std::size_t host_pattern_size = 3;
  std::size_t host_retry = 100;
  auto* plant = app.add_subcommand("plant-host", "Plant the pattern into host graphs");
  plant->add_option("--hosts", hosts_path, "Host graphs as JSON lines (random hosts when omitted)");
  plant->add_option("--num-hosts", num_hosts, "Number of random hosts")->check(CLI::PositiveNumber);
  plant->add_option("--host-nodes", host_nodes, "Nodes per random host")->check(CLI::PositiveNumber);
  plant->add_option("--edge-prob", edge_prob, "Extra edge probability of random hosts")->check(CLI::Range(0.0, 1.0));
  plant->add_option("--host-colors", host_colors, "Palette size of random hosts")->check(CLI::PositiveNumber);
  plant->add_option("--pattern", host_pattern, "Pattern shape")->check(CLI::IsMember({"chain", "star"}));
  plant->add_option("--pattern-size", host_pattern_size, "Pattern node count");
  plant->add_option("--retry-budget", host_retry, "Draws per sample before giving up");

  // verify
  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "Re-check the partition of a dataset directory");
  verify->add_option("--data", verify_dir, "Dataset directory")->required();

  // train
  DataOptions train_data;
  TrainOptions train_opts;
  std::string train_conv = "gcn";
  std::string train_pool = "attn";
  bool no_linear = false;
  bool theory = false;
  std::size_t log_every = 0;
  auto* train_cmd = app.add_subcommand("train", "Train one model and save a checkpoint");
  add_data_options(train_cmd, train_data);
  add_train_options(train_cmd, train_opts);
  train_cmd->add_option("--conv", train_conv, "Convolution")->check(CLI::IsMember({"gcn", "gat"}));
  train_cmd->add_option("--pooling", train_pool, "Pooling")->check(CLI::IsMember({"max", "avg", "sum", "attn"}));
  train_cmd->add_option("--beta", train_opts.beta, "Attention temperature")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-linear", no_linear, "Drop the linear classifier");
  train_cmd->add_flag("--theory", theory, "Identity transform, no activation or normalization");
  train_cmd->add_option("--log-every", log_every, "Log every n optimizer steps");

  // probe
  DataOptions probe_data;
  TrainOptions probe_opts;
  auto* probe = app.add_subcommand("probe", "Label counts of trained models on the unlabeled partition");
  add_data_options(probe, probe_data);
  add_train_options(probe, probe_opts);
  add_grid_options(probe, probe_opts);

  // generalize
  DataOptions gen_eval_data;
  TrainOptions gen_eval_opts;
  std::vector<std::size_t> test_sizes{12, 13};
  std::size_t test_count = 0;
  auto* generalize = app.add_subcommand("generalize", "Accuracy on freshly synthesized square grids");
  add_data_options(generalize, gen_eval_data);
  add_train_options(generalize, gen_eval_opts);
  add_grid_options(generalize, gen_eval_opts);
  generalize->add_option("--test-sizes", test_sizes, "Side lengths of the test grids")->delimiter(',');
  generalize->add_option("--test-count", test_count, "Graphs per labeled test partition (default: --count)");

  // sweep-beta
  DataOptions sweep_data;
  TrainOptions sweep_opts;
  std::vector<std::string> betas{"1", "4", "10", "300"};
  auto* sweep = app.add_subcommand("sweep-beta", "Attention pooling across temperatures");
  add_data_options(sweep, sweep_data);
  add_train_options(sweep, sweep_opts);
  sweep->add_option("--convs", sweep_opts.convs, "Convolution kinds")
      ->delimiter(',')
      ->check(CLI::IsMember({"gcn", "gat"}));
  sweep->add_option("--betas", betas, "Temperatures")->delimiter(',');

  // ablate-linear
  DataOptions ablate_data;
  TrainOptions ablate_opts;
  auto* ablate = app.add_subcommand("ablate-linear", "Each pooling with and without the linear classifier");
  add_data_options(ablate, ablate_data);
  add_train_options(ablate, ablate_opts);
  add_grid_options(ablate, ablate_opts);
  ablate->add_option("--nolinear-nonlinearity", ablate_opts.nolinear_nonlinearity,
                     "Activation of the classifier-free variant")
      ->check(CLI::IsMember({"relu", "sigmoid", "identity"}));
  ablate->add_option("--nolinear-epochs", ablate_opts.nolinear_epochs, "Epochs of the classifier-free variant")
      ->check(CLI::PositiveNumber);

  // search
  DataOptions search_data;
  search_data.rows = 6;
  search_data.cols = 6;
  search_data.count = 36;
  std::size_t search_k = 3;
  auto* search = app.add_subcommand("search", "Subgraphs present in every D1 graph and no D0 graph");
  add_data_options(search, search_data);
  search->add_option("--k", search_k, "Largest subgraph size")->check(CLI::Range(1, 5));

  // grad-check
  std::size_t gc_graphs = 20;
  std::size_t gc_max_nodes = 16;
  std::size_t gc_palette = 7;
  std::size_t gc_width = 4;
  std::string gc_conv = "gcn";
  std::string gc_pool = "attn";
  double gc_beta = 1.0;
  double gc_tol = 1e-4;
  bool gc_theory = false;
  std::string gc_nonlinearity = "sigmoid";
  auto* gradcheck = app.add_subcommand("grad-check", "Autodiff against central finite differences");
  gradcheck->add_option("--graphs", gc_graphs, "Random graphs")->check(CLI::PositiveNumber);
  gradcheck->add_option("--max-nodes", gc_max_nodes, "Largest graph")->check(CLI::Range(2, 64));
  gradcheck->add_option("--palette", gc_palette, "Palette size")->check(CLI::PositiveNumber);
  gradcheck->add_option("--width", gc_width, "Hidden width")->check(CLI::PositiveNumber);
  gradcheck->add_option("--conv", gc_conv, "Convolution")->check(CLI::IsMember({"gcn", "gat"}));
  gradcheck->add_option("--pooling", gc_pool, "Pooling")->check(CLI::IsMember({"max", "avg", "sum", "attn"}));
  gradcheck->add_option("--beta", gc_beta, "Attention temperature")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", gc_tol, "Largest accepted relative error");
  gradcheck->add_option("--nonlinearity", gc_nonlinearity, "Activation")
      ->check(CLI::IsMember({"relu", "sigmoid", "identity"}));
  gradcheck->add_flag("--theory", gc_theory, "Check the theory-mode model, including closed forms");

  // trace-alignment
  DataOptions trace_data;
  TrainConfig trace_cfg = default_theory_train_config();
  double trace_beta = 1.0;
  auto* trace = app.add_subcommand("trace-alignment", "Theory-mode training with per-step alignment monitors");
  add_data_options(trace, trace_data);
  trace->add_option("--lr", trace_cfg.learning_rate, "Learning rate");
  trace->add_option("--epochs", trace_cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
  trace->add_option("--beta", trace_beta, "Attention temperature")->check(CLI::PositiveNumber);

  // report
  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Re-render JSON reports in --format");
  report->add_option("inputs", report_inputs, "JSON report files")->required()->check(CLI::ExistingFile);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = inject_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    (void)g.report_format();
    if (*gen) {
      const auto ds = synth_grid_partition(synth_spec(gen_data, g.seed));
      save_dataset(g.out, ds);
      publish(verification_report(verify_partition(ds)), g, "verify");
    } else if (*plant) {
      Rng rng(g.seed);
      std::vector<Graph> hosts;
      if (!hosts_path.empty()) {
        hosts = read_graphs_jsonl(hosts_path);
      } else {
        std::vector<Color> palette(host_colors);
        for (std::size_t c = 0; c < host_colors; ++c) palette[c] = c;
        for (std::size_t i = 0; i < num_hosts; ++i) hosts.push_back(random_host_graph(host_nodes, edge_prob, palette, rng));
      }
      const Pattern p = pattern_after_hosts(hosts, pattern_kind_from_string(host_pattern), host_pattern_size);
      const auto ds = plant_host_partitions(hosts, p, rng, host_retry);
      save_dataset(g.out, ds);
      publish(verification_report(verify_partition(ds)), g, "verify");
    } else if (*verify) {
      const auto v = verify_partition(load_dataset(verify_dir));
      publish(verification_report(v), g, "verify");
      if (!v.ok()) throw CheckFailed{};
    } else if (*train_cmd) {
      const auto ds = obtain_dataset(train_data, g.seed);
      TrainConfig tc;
      tc.learning_rate = train_opts.lr;
      tc.epochs = train_opts.epochs;
      tc.batch_size = train_opts.batch;
      tc.optimizer = optimizer_from_string(train_opts.optimizer);
      tc.seed = g.seed;
      tc.log_every = log_every;
      ModelParams init;
      if (theory) {
        init = theory_params(ds.palette_size, pooling_from_string(train_pool), train_opts.beta);
      } else {
        ModelConfig mc;
        mc.palette_size = ds.palette_size;
        mc.width = train_opts.width;
        mc.pooling = pooling_from_string(train_pool);
        mc.beta = train_opts.beta;
        mc.conv = conv_from_string(train_conv);
        // Without the classifier the default activation follows the ablation
        // (identity) unless one was given explicitly.
        const bool explicit_act = train_cmd->get_option("--nonlinearity")->count() > 0;
        mc.flags.nonlinearity = nonlinearity_from_string(
            no_linear && !explicit_act ? train_opts.nolinear_nonlinearity : train_opts.nonlinearity);
        mc.flags.use_linear_classifier = !no_linear;
        init = init_params(mc, g.seed, train_opts.init_scale);
      }
      const auto result = train(init, ds.labeled(), tc);
      save_checkpoint(result.params, fs::path(g.out) / "checkpoint.json");
      write_text_file(fs::path(g.out) / "train_log.csv", result.trace.to_csv());
      Report r;
      r.experiment = "train";
      r.config = {{"conv", std::string(to_string(result.params.conv))},
                  {"pooling", std::string(to_string(result.params.pooling))},
                  {"optimizer", std::string(to_string(tc.optimizer))},
                  {"epochs", std::to_string(tc.epochs)}};
      r.seeds = {g.seed};
      r.columns = {"steps", "train_loss", "train_acc", "dperp_y1", "dperp_y0"};
      const auto counts = count_labels(result.params, ds.partition(Partition::dperp));
      r.add_row({static_cast<std::int64_t>(result.trace.steps), result.trace.final_eval.loss,
                 result.trace.final_eval.accuracy, static_cast<std::int64_t>(counts.ones),
                 static_cast<std::int64_t>(counts.zeros)});
      publish(r, g, "train_summary");
    } else if (*probe) {
      const auto ds = obtain_dataset(probe_data, g.seed);
      publish(run_bias_probe(ds, experiment_config(probe_opts, g.seed)), g, "bias_probe");
    } else if (*generalize) {
      const auto ds = obtain_dataset(gen_eval_data, g.seed);
      std::vector<NamedSet> tests;
      for (std::size_t side : test_sizes) {
        DataOptions t = gen_eval_data;
        t.rows = t.cols = side;
        t.count = test_count ? test_count : gen_eval_data.count;
        t.dperp_count = 1;
        // Test grids use their own seed stream so they never coincide with
        // the training graphs.
        const auto test_ds = synth_grid_partition(synth_spec(t, g.seed + 7919 * side + 1));
        tests.push_back({std::to_string(side) + "x" + std::to_string(side), test_ds.labeled()});
      }
      publish(run_generalization(ds, tests, experiment_config(gen_eval_opts, g.seed)), g, "generalization");
    } else if (*sweep) {
      const auto ds = obtain_dataset(sweep_data, g.seed);
      publish(run_beta_sweep(ds, parse_doubles(betas), experiment_config(sweep_opts, g.seed)), g, "beta_sweep");
    } else if (*ablate) {
      const auto ds = obtain_dataset(ablate_data, g.seed);
      publish(run_nolinear_ablation(ds, experiment_config(ablate_opts, g.seed)), g, "nolinear_ablation");
    } else if (*search) {
      const auto ds = obtain_dataset(search_data, g.seed);
      const auto result = exhaustive_search(ds.partition(Partition::d1), ds.partition(Partition::d0), search_k);
      write_text_file(fs::path(g.out) / "search_hits.json", result.to_json());
      publish(search_report(result), g, "search");
    } else if (*gradcheck) {
      Rng rng(g.seed);
      std::vector<Color> palette(gc_palette);
      for (std::size_t c = 0; c < gc_palette; ++c) palette[c] = c;
      std::vector<Graph> graphs;
      std::uniform_int_distribution<std::size_t> size_dist(2, gc_max_nodes);
      for (std::size_t i = 0; i < gc_graphs; ++i) {
        graphs.push_back(random_host_graph(size_dist(rng), 0.2, palette, rng));
      }
      ModelParams m;
      if (gc_theory) {
        m = theory_params(gc_palette, pooling_from_string(gc_pool), gc_beta);
        // Move away from the all-zero start so the check sees curvature.
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (double& x : m.attn.values()) x = u(rng);
        for (double& x : m.classifier.values()) x = u(rng);
      } else {
        ModelConfig mc;
        mc.palette_size = gc_palette;
        mc.width = gc_width;
        mc.pooling = pooling_from_string(gc_pool);
        mc.beta = gc_beta;
        mc.conv = conv_from_string(gc_conv);
        mc.flags.nonlinearity = nonlinearity_from_string(gc_nonlinearity);
        m = init_params(mc, g.seed, 0.5);
      }
      const auto rep = grad_check(m, graphs, gc_tol);
      publish(grad_check_report(rep, m), g, "grad_check");
      if (!rep.passed) throw CheckFailed{};
    } else if (*trace) {
      const auto ds = obtain_dataset(trace_data, g.seed);
      trace_cfg.seed = g.seed;
      const auto run = run_alignment(ds, trace_beta, trace_cfg);
      write_text_file(fs::path(g.out) / "alignment.csv", alignment_csv(run.records));
      write_text_file(fs::path(g.out) / "train_log.csv", run.result.trace.to_csv());
      publish(alignment_summary_report(run, trace_beta, trace_cfg), g, "alignment_summary");
    } else if (*report) {
      const ReportFormat f = g.report_format();
      for (const auto& path : report_inputs) {
        const Report r = report_from_json(read_text_file(path), path);
        emit_report(r, f, fs::path(g.out) / (fs::path(path).stem().string() + "." + std::string(to_string(f))));
        std::cout << render(r, f);
      }
    }
  } catch (const CheckFailed&) {
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
