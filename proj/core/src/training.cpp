#include "gnnbias/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gnnbias/error.hpp"
#include "gnnbias/graph_io.hpp"
#include "json.hpp"

namespace gnnbias {

using nlohmann::json;

double bce_loss(double logit, int label) { return ad::log1p_exp(logit) - static_cast<double>(label) * logit; }

double bce_loss_from_probability(double p, int label) {
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

std::string_view to_string(Optimizer o) { return o == Optimizer::gd ? "gd" : "adam"; }

Optimizer optimizer_from_string(std::string_view s) {
  if (s == "gd" || s == "sgd") return Optimizer::gd;
  if (s == "adam") return Optimizer::adam;
  throw InvalidArgument("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be a finite non-negative number");
  }
  if (epochs == 0) throw InvalidArgument("epochs must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
}

TrainingSet make_training_set(const std::vector<Graph>& graphs, const ModelParams& m) {
  TrainingSet data;
  data.inputs.reserve(graphs.size());
  data.labels.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].label()) throw InvalidArgument("training graph " + std::to_string(i) + " has no label");
    data.inputs.push_back(prepare_inputs(graphs[i], m));
    data.labels.push_back(*graphs[i].label());
  }
  return data;
}

Evaluation evaluate(const ModelParams& m, const TrainingSet& data) {
  Evaluation e;
  if (data.size() == 0) return e;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = logit(data.inputs[i], m);
    e.loss += bce_loss(z, data.labels[i]);
    const int yhat = ad::sigmoid(z) >= 0.5 ? 1 : 0;
    if (yhat == data.labels[i]) ++correct;
  }
  e.loss /= static_cast<double>(data.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

Gradients sample_gradients(const ModelParams& m, const GraphInputs& in, int label) {
  ad::Tape tape;
  ParamTensors p = attach_params(tape, m, true);
  const ForwardGraph f = forward(tape, in, p, m);
  const ad::Tensor z = f.logit;
  const ad::Tensor loss = ad::sub(ad::log1p_exp(z), ad::scale(z, static_cast<double>(label)));
  tape.backward(loss);
  Gradients g;
  g.loss = loss.scalar();
  for (ParamGroup grp : trainable_groups(m)) {
    const ad::Tensor& t = p[grp];
    g[grp] = t.grad().size() ? t.grad() : Matrix(t.rows(), t.cols());
  }
  return g;
}

namespace {

void add_into(Matrix& acc, const Matrix& x) {
  if (acc.size() == 0) {
    acc = x;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

void scale_in_place(Matrix& x, double c) {
  for (double& v : x.values()) v *= c;
}

}  // namespace

Gradients loss_gradients(const ModelParams& m, const TrainingSet& data, const std::vector<std::size_t>& indices) {
  Gradients total;
  std::size_t count = 0;
  auto accumulate = [&](std::size_t i) {
    const Gradients g = sample_gradients(m, data.inputs[i], data.labels[i]);
    for (std::size_t k = 0; k < total.by_group.size(); ++k) {
      if (g.by_group[k].size()) add_into(total.by_group[k], g.by_group[k]);
    }
    total.loss += g.loss;
    ++count;
  };
  if (indices.empty()) {
    for (std::size_t i = 0; i < data.size(); ++i) accumulate(i);
  } else {
    for (std::size_t i : indices) accumulate(i);
  }
  if (count == 0) return total;
  const double inv = 1.0 / static_cast<double>(count);
  for (Matrix& x : total.by_group) scale_in_place(x, inv);
  total.loss *= inv;
  return total;
}

std::string TrainTrace::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i == 0) {
        std::snprintf(buf, sizeof buf, "%.0f", row[i]);
      } else {
        std::snprintf(buf, sizeof buf, "%.6g", row[i]);
      }
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t t = 0;
};

void apply_update(ModelParams& params, const Gradients& g, const TrainConfig& cfg, AdamState& adam) {
  const auto groups = trainable_groups(params);
  if (cfg.optimizer == Optimizer::adam) {
    ++adam.t;
    if (adam.m.empty()) {
      adam.m.resize(4);
      adam.v.resize(4);
    }
  }
  for (ParamGroup grp : groups) {
    Matrix& w = group(params, grp);
    const Matrix& d = g[grp];
    if (cfg.optimizer == Optimizer::gd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * d[i];
      continue;
    }
    const auto k = static_cast<std::size_t>(grp);
    if (adam.m[k].size() == 0) {
      adam.m[k] = Matrix(w.rows(), w.cols());
      adam.v[k] = Matrix(w.rows(), w.cols());
    }
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      double& mi = adam.m[k][i];
      double& vi = adam.v[k][i];
      mi = cfg.adam_beta1 * mi + (1.0 - cfg.adam_beta1) * d[i];
      vi = cfg.adam_beta2 * vi + (1.0 - cfg.adam_beta2) * d[i] * d[i];
      w[i] -= cfg.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + cfg.adam_eps);
    }
  }
}

}  // namespace

TrainResult train(const ModelParams& init, const TrainingSet& data, const TrainConfig& cfg,
                  const std::vector<Monitor>& monitors) {
  cfg.validate();
  init.validate();
  if (data.size() == 0) throw InvalidArgument("training set is empty");
  for (int y : data.labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }

  TrainResult result{init, {}};
  TrainTrace& trace = result.trace;
  trace.columns = {"step", "loss", "train_acc"};
  for (const Monitor& mon : monitors) trace.columns.insert(trace.columns.end(), mon.columns.begin(), mon.columns.end());

  ModelParams& params = result.params;
  ModelParams previous = params;
  std::size_t step = 0;
  std::size_t epoch = 0;

  auto log_row = [&]() {
    StepContext ctx;
    ctx.step = step;
    ctx.epoch = epoch;
    ctx.params = &params;
    ctx.previous = &previous;
    ctx.data = &data;
    ctx.eval = evaluate(params, data);
    std::vector<double> row{static_cast<double>(step), ctx.eval.loss, ctx.eval.accuracy};
    for (const Monitor& mon : monitors) {
      const auto vals = mon.observe(ctx);
      if (vals.size() != mon.columns.size()) throw InvalidArgument("monitor returned the wrong number of values");
      row.insert(row.end(), vals.begin(), vals.end());
    }
    trace.rows.push_back(std::move(row));
  };

  const bool logging = cfg.log_every > 0;
  if (logging) log_row();

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = cfg.batch_size == 0 ? data.size() : std::min(cfg.batch_size, data.size());
  AdamState adam;

  for (epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch, order.size())));
      const Gradients g = loss_gradients(params, data, idx);
      if (!std::isfinite(g.loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
      }
      epoch_loss += g.loss;
      ++batches;
      previous = params;
      apply_update(params, g, cfg, adam);
      ++step;
      if (logging && step % cfg.log_every == 0) log_row();
    }
    trace.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  epoch = cfg.epochs - 1;
  if (logging && step % cfg.log_every != 0) log_row();
  trace.steps = step;
  trace.final_eval = evaluate(params, data);
  return result;
}

TrainResult train(const ModelParams& init, const std::vector<Graph>& graphs, const TrainConfig& cfg,
                  const std::vector<Monitor>& monitors) {
  return train(init, make_training_set(graphs, init), cfg, monitors);
}

ClosedFormGrads closed_form_grads(const Graph& g, int label, const ModelParams& m) {
  if (!m.flags.theory_mode) throw InvalidArgument("closed-form gradients require theory mode");
  if (m.pooling != Pooling::attn) throw InvalidArgument("closed-form gradients require attention pooling");
  const Matrix v = node_reps(g, m);
  const std::size_t n = v.rows();
  const std::size_t d = v.cols();
  const Matrix alpha = attention_weights(v, m);
  Matrix vhat(d, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) vhat[c] += alpha[i] * v(i, c);
  }
  const double z = dot(m.classifier.values(), vhat.values());
  const double residual = ad::sigmoid(z) - static_cast<double>(label);

  ClosedFormGrads out{Matrix(d, 1), Matrix(d, 1)};
  for (std::size_t c = 0; c < d; ++c) out.dw[c] = residual * vhat[c];
  for (std::size_t i = 0; i < n; ++i) {
    const double wv = dot(m.classifier.values(), v.row(i));
    const double coef = residual * alpha[i] * wv / m.beta;
    for (std::size_t c = 0; c < d; ++c) out.da[c] += coef * (v(i, c) - vhat[c]);
  }
  return out;
}

double relative_error(const Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw InvalidArgument("relative_error: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(x[i]), std::abs(y[i]), kRelErrFloor});
    worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
  }
  return worst;
}

double GradCheckReport::max_error() const {
  double worst = 0.0;
  for (const auto& g : groups) {
    worst = std::max(worst, g.finite_diff);
    if (g.closed_form) worst = std::max(worst, *g.closed_form);
  }
  return worst;
}

GradCheckReport grad_check(const ModelParams& m, const std::vector<Graph>& graphs, double tol,
                           const GradientFn& analytic, double h) {
  m.validate();
  const GradientFn grad_fn = analytic ? analytic : GradientFn(sample_gradients);
  const auto groups = trainable_groups(m);
  const bool closed = m.flags.theory_mode && m.pooling == Pooling::attn;

  GradCheckReport report;
  report.tolerance = tol;
  report.graphs = graphs.size();
  for (ParamGroup grp : groups) {
    GroupError e{grp, 0.0, std::nullopt};
    if (closed && (grp == ParamGroup::attn || grp == ParamGroup::classifier)) e.closed_form = 0.0;
    report.groups.push_back(e);
  }

  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    const int label = g.label().value_or(static_cast<int>(gi % 2));
    const GraphInputs in = prepare_inputs(g, m);
    const Gradients got = grad_fn(m, in, label);

    std::vector<Matrix> start;
    for (ParamGroup grp : groups) start.push_back(group(m, grp));
    auto loss_at = [&](const std::vector<Matrix>& values) {
      ModelParams probe = m;
      for (std::size_t k = 0; k < groups.size(); ++k) group(probe, groups[k]) = values[k];
      return bce_loss(logit(in, probe), label);
    };
    const auto numeric = ad::finite_diff_grad(loss_at, start, h);

    std::optional<ClosedFormGrads> cf;
    if (closed) cf = closed_form_grads(g, label, m);

    for (std::size_t k = 0; k < groups.size(); ++k) {
      const Matrix& a = got[groups[k]];
      GroupError& e = report.groups[k];
      e.finite_diff = std::max(e.finite_diff, relative_error(a, numeric[k]));
      if (cf && e.closed_form) {
        const Matrix& ref = groups[k] == ParamGroup::attn ? cf->da : cf->dw;
        e.closed_form = std::max(*e.closed_form, relative_error(a, ref));
      }
    }
  }
  report.passed = report.max_error() < tol;
  return report;
}

namespace {

json matrix_json(const Matrix& x) {
  return json{{"rows", x.rows()}, {"cols", x.cols()}, {"data", std::vector<double>(x.values().begin(), x.values().end())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  return Matrix(rows, cols, j.at("data").get<std::vector<double>>());
}

}  // namespace

std::string checkpoint_to_json(const ModelParams& m) {
  json j;
  j["version"] = kCheckpointVersion;
  j["pooling"] = std::string(to_string(m.pooling));
  j["beta"] = m.beta;
  j["conv"] = std::string(to_string(m.conv));
  j["flags"] = {
      {"use_self_loops", m.flags.use_self_loops},
      {"degree_normalize", m.flags.degree_normalize},
      {"nonlinearity", std::string(to_string(m.flags.nonlinearity))},
      {"use_linear_classifier", m.flags.use_linear_classifier},
      {"theory_mode", m.flags.theory_mode},
  };
  j["theta"] = matrix_json(m.theta);
  j["attn"] = matrix_json(m.attn);
  j["classifier"] = matrix_json(m.classifier);
  j["gat_attn"] = matrix_json(m.gat_attn);
  return j.dump(2) + "\n";
}

ModelParams checkpoint_from_json(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError(where + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
    }
    ModelParams m;
    m.pooling = pooling_from_string(j.at("pooling").get<std::string>());
    m.beta = j.at("beta").get<double>();
    m.conv = conv_from_string(j.at("conv").get<std::string>());
    const json& f = j.at("flags");
    m.flags.use_self_loops = f.at("use_self_loops").get<bool>();
    m.flags.degree_normalize = f.at("degree_normalize").get<bool>();
    m.flags.nonlinearity = nonlinearity_from_string(f.at("nonlinearity").get<std::string>());
    m.flags.use_linear_classifier = f.at("use_linear_classifier").get<bool>();
    m.flags.theory_mode = f.at("theory_mode").get<bool>();
    m.theta = matrix_from(j.at("theta"));
    m.attn = matrix_from(j.at("attn"));
    m.classifier = matrix_from(j.at("classifier"));
    m.gat_attn = matrix_from(j.at("gat_attn"));
    m.validate();
    return m;
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(where + ": " + e.what());
  }
}

void save_checkpoint(const ModelParams& m, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(m));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text_file(path), path.string());
}

}  // namespace gnnbias
