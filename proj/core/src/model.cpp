#include "gnnbias/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gnnbias/error.hpp"

namespace gnnbias {

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::max: return "max";
    case Pooling::avg: return "avg";
    case Pooling::sum: return "sum";
    case Pooling::attn: return "attn";
  }
  return "?";
}

std::string_view to_string(Conv c) { return c == Conv::gcn ? "gcn" : "gat"; }

std::string_view to_string(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::sigmoid: return "sigmoid";
    case Nonlinearity::identity: return "identity";
    case Nonlinearity::relu: return "relu";
  }
  return "?";
}

Pooling pooling_from_string(std::string_view s) {
  if (s == "max" || s == "MAX") return Pooling::max;
  if (s == "avg" || s == "AVG") return Pooling::avg;
  if (s == "sum" || s == "SUM") return Pooling::sum;
  if (s == "attn" || s == "ATTN") return Pooling::attn;
  throw InvalidArgument("unknown pooling '" + std::string(s) + "'");
}

Conv conv_from_string(std::string_view s) {
  if (s == "gcn" || s == "GCN") return Conv::gcn;
  if (s == "gat" || s == "GAT") return Conv::gat;
  throw InvalidArgument("unknown convolution '" + std::string(s) + "'");
}

Nonlinearity nonlinearity_from_string(std::string_view s) {
  if (s == "sigmoid") return Nonlinearity::sigmoid;
  if (s == "identity") return Nonlinearity::identity;
  if (s == "relu") return Nonlinearity::relu;
  throw InvalidArgument("unknown nonlinearity '" + std::string(s) + "'");
}

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::theta: return "theta";
    case ParamGroup::attn: return "attn";
    case ParamGroup::classifier: return "classifier";
    case ParamGroup::gat_attn: return "gat_attn";
  }
  return "?";
}

void ModelParams::validate() const {
  const std::size_t k = theta.rows();
  const std::size_t d = theta.cols();
  if (k == 0 || d == 0) throw InvalidArgument("theta must be non-empty");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive");
  if (attn.rows() != d || attn.cols() != 1) throw InvalidArgument("attn must be (d, 1)");
  if (classifier.rows() != d || classifier.cols() != 1) throw InvalidArgument("classifier must be (d, 1)");
  if (conv == Conv::gat) {
    if (gat_attn.rows() != 2 * d || gat_attn.cols() != 1) throw InvalidArgument("gat_attn must be (2d, 1)");
  } else if (gat_attn.size() != 0) {
    throw InvalidArgument("gat_attn is only present for GAT");
  }
  if (!flags.use_linear_classifier && d != 1) {
    throw InvalidArgument("without the linear classifier the width must be 1");
  }
  if (flags.theory_mode) {
    if (conv != Conv::gcn) throw InvalidArgument("theory mode requires GCN");
    if (d != k || theta != Matrix::identity(k)) throw InvalidArgument("theory mode requires theta = I");
    if (flags.nonlinearity != Nonlinearity::identity || flags.degree_normalize) {
      throw InvalidArgument("theory mode requires identity activation and no degree normalization");
    }
  }
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed, double scale) {
  ModelParams m;
  m.pooling = cfg.pooling;
  m.beta = cfg.beta;
  m.conv = cfg.conv;
  m.flags = cfg.flags;
  const std::size_t d = cfg.flags.use_linear_classifier ? cfg.width : 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto random = [&](std::size_t r, std::size_t c) {
    Matrix x(r, c);
    for (double& v : x.values()) v = u(rng);
    return x;
  };
  m.theta = random(cfg.palette_size, d);
  m.attn = random(d, 1);
  m.classifier = random(d, 1);
  if (cfg.conv == Conv::gat) m.gat_attn = random(2 * d, 1);
  if (!cfg.flags.use_linear_classifier) m.classifier = Matrix(1, 1, 1.0);
  m.validate();
  return m;
}

ModelParams theory_params(std::size_t palette_size, Pooling pooling, double beta) {
  ModelParams m;
  m.theta = Matrix::identity(palette_size);
  m.attn = Matrix(palette_size, 1);
  m.classifier = Matrix(palette_size, 1);
  m.pooling = pooling;
  m.beta = beta;
  m.conv = Conv::gcn;
  m.flags.use_self_loops = true;
  m.flags.degree_normalize = false;
  m.flags.nonlinearity = Nonlinearity::identity;
  m.flags.use_linear_classifier = true;
  m.flags.theory_mode = true;
  m.validate();
  return m;
}

std::vector<ParamGroup> trainable_groups(const ModelParams& m) {
  std::vector<ParamGroup> out;
  if (!m.flags.theory_mode) out.push_back(ParamGroup::theta);
  if (m.pooling == Pooling::attn) out.push_back(ParamGroup::attn);
  if (m.flags.use_linear_classifier) out.push_back(ParamGroup::classifier);
  if (m.conv == Conv::gat) out.push_back(ParamGroup::gat_attn);
  return out;
}

Matrix& group(ModelParams& m, ParamGroup g) {
  switch (g) {
    case ParamGroup::theta: return m.theta;
    case ParamGroup::attn: return m.attn;
    case ParamGroup::classifier: return m.classifier;
    case ParamGroup::gat_attn: return m.gat_attn;
  }
  return m.theta;
}

const Matrix& group(const ModelParams& m, ParamGroup g) {
  return group(const_cast<ModelParams&>(m), g);
}

Matrix propagation_matrix(const Graph& g, const ModelFlags& flags) {
  const std::size_t n = g.num_nodes();
  Matrix a(n, n);
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : g.neighbors(i)) a(i, j) = 1.0;
    if (flags.use_self_loops) a(i, i) = 1.0;
  }
  if (flags.degree_normalize && !flags.theory_mode) {
    std::vector<double> inv_sqrt(n, 0.0);
    for (NodeId i = 0; i < n; ++i) {
      double deg = 0.0;
      for (double v : a.row(i)) deg += v;
      inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    }
  }
  return a;
}

GraphInputs prepare_inputs(const Graph& g, const ModelParams& m) {
  const std::size_t n = g.num_nodes();
  const std::size_t k = m.palette_size();
  if (n == 0) throw InvalidArgument("graph has no nodes");
  GraphInputs in;
  in.features = Matrix(n, k);
  for (NodeId i = 0; i < n; ++i) {
    if (g.color(i) >= k) throw InvalidArgument("node color outside the model palette");
    in.features(i, g.color(i)) = 1.0;
  }
  if (m.conv == Conv::gcn) {
    const Matrix a = propagation_matrix(g, m.flags);
    in.propagated = Matrix(n, k);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) {
        if (a(i, j) != 0.0) in.propagated(i, g.color(j)) += a(i, j);
      }
    }
  } else {
    in.mask = Matrix(n, n);
    for (NodeId i = 0; i < n; ++i) {
      in.mask(i, i) = 1.0;
      for (NodeId j : g.neighbors(i)) in.mask(i, j) = 1.0;
    }
  }
  return in;
}

ad::Tensor& ParamTensors::operator[](ParamGroup g) {
  switch (g) {
    case ParamGroup::theta: return theta;
    case ParamGroup::attn: return attn;
    case ParamGroup::classifier: return classifier;
    case ParamGroup::gat_attn: return gat_attn;
  }
  return theta;
}

ParamTensors attach_params(ad::Tape& tape, const ModelParams& m, bool trainable) {
  ParamTensors p;
  const auto groups = trainable ? trainable_groups(m) : std::vector<ParamGroup>{};
  for (ParamGroup g : kAllGroups) {
    if (g == ParamGroup::gat_attn && m.conv != Conv::gat) continue;
    const bool var = std::find(groups.begin(), groups.end(), g) != groups.end();
    p[g] = var ? tape.variable(group(m, g)) : tape.constant(group(m, g));
  }
  return p;
}

namespace {

ad::Tensor activate(const ad::Tensor& x, const ModelFlags& flags) {
  switch (flags.nonlinearity) {
    case Nonlinearity::sigmoid: return ad::sigmoid(x);
    case Nonlinearity::relu: return ad::relu(x);
    case Nonlinearity::identity: break;
  }
  return x;
}

ad::Tensor conv_reps(ad::Tape& tape, const GraphInputs& in, const ParamTensors& p, const ModelParams& m) {
  if (m.conv == Conv::gcn) {
    const ad::Tensor prop = tape.constant(in.propagated);
    if (m.flags.theory_mode) return prop;
    return activate(ad::matmul(prop, p.theta), m.flags);
  }
  // Single-head GAT over the closed neighbourhood.
  const std::size_t d = m.width();
  const ad::Tensor x = tape.constant(in.features);
  const ad::Tensor z = ad::matmul(x, p.theta);
  const ad::Tensor src = ad::matmul(z, ad::slice_rows(p.gat_attn, 0, d));
  const ad::Tensor dst = ad::matmul(z, ad::slice_rows(p.gat_attn, d, d));
  const ad::Tensor e = ad::leaky_relu(ad::outer_sum(src, dst), 0.2);
  const ad::Tensor alpha = ad::masked_row_softmax(e, tape.constant(in.mask));
  return activate(ad::matmul(alpha, z), m.flags);
}

}  // namespace

ForwardGraph forward(ad::Tape& tape, const GraphInputs& in, const ParamTensors& p, const ModelParams& m) {
  ForwardGraph f;
  f.reps = conv_reps(tape, in, p, m);
  switch (m.pooling) {
    case Pooling::sum: f.pooled = ad::row_sum(f.reps); break;
    case Pooling::avg: f.pooled = ad::row_mean(f.reps); break;
    case Pooling::max: f.pooled = ad::row_max(f.reps); break;
    case Pooling::attn:
      f.weights = ad::softmax_beta(ad::matmul(f.reps, p.attn), m.beta);
      f.pooled = ad::matmul(ad::transpose(f.reps), f.weights);
      break;
  }
  f.logit = m.flags.use_linear_classifier ? ad::dot(p.classifier, f.pooled) : f.pooled;
  return f;
}

Matrix gcn_forward(const Graph& g, const ModelParams& m) {
  if (m.conv != Conv::gcn) throw InvalidArgument("gcn_forward called on a GAT model");
  return node_reps(g, m);
}

Matrix gat_forward(const Graph& g, const ModelParams& m) {
  if (m.conv != Conv::gat) throw InvalidArgument("gat_forward called on a GCN model");
  return node_reps(g, m);
}

Matrix node_reps(const Graph& g, const ModelParams& m) {
  ad::Tape tape;
  const auto in = prepare_inputs(g, m);
  const auto p = attach_params(tape, m, false);
  return conv_reps(tape, in, p, m).value();
}

Matrix pool(const Matrix& reps, const ModelParams& m) {
  if (reps.rows() == 0) throw InvalidArgument("pool: no nodes");
  ad::Tape tape;
  const ad::Tensor v = tape.constant(reps);
  switch (m.pooling) {
    case Pooling::sum: return ad::row_sum(v).value();
    case Pooling::avg: return ad::row_mean(v).value();
    case Pooling::max: return ad::row_max(v).value();
    case Pooling::attn: {
      const auto w = ad::softmax_beta(ad::matmul(v, tape.constant(m.attn)), m.beta);
      return ad::matmul(ad::transpose(v), w).value();
    }
  }
  return {};
}

Matrix attention_weights(const Matrix& reps, const ModelParams& m) {
  ad::Tape tape;
  const ad::Tensor v = tape.constant(reps);
  return ad::softmax_beta(ad::matmul(v, tape.constant(m.attn)), m.beta).value();
}

double logit(const GraphInputs& in, const ModelParams& m) {
  ad::Tape tape;
  const auto p = attach_params(tape, m, false);
  return forward(tape, in, p, m).logit.scalar();
}

double logit(const Graph& g, const ModelParams& m) { return logit(prepare_inputs(g, m), m); }

double predict(const GraphInputs& in, const ModelParams& m) { return ad::sigmoid(logit(in, m)); }

double predict(const Graph& g, const ModelParams& m) { return ad::sigmoid(logit(g, m)); }

}  // namespace gnnbias
