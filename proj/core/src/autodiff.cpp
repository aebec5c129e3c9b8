#include "gnnbias/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gnnbias/error.hpp"

namespace gnnbias::ad {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(what);
}

Matrix matmul_values(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// out += a * b^T
void add_matmul_bt(Matrix& out, const Matrix& a, const Matrix& b) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) += s;
    }
  }
}

// out += a^T * b
void add_matmul_at(Matrix& out, const Matrix& a, const Matrix& b) {
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
}

}  // namespace

Tensor record(Op op, const Tensor& a, const Tensor* b, double param, Matrix value,
              std::vector<std::size_t> aux) {
  require(a.tape() != nullptr, "tensor is not attached to a tape");
  if (b) require(b->tape() == a.tape(), "tensors belong to different tapes");
  Tape& tape = *a.tape();
  Tape::Node n;
  n.op = op;
  n.a = a.id();
  n.has_b = b != nullptr;
  n.b = b ? b->id() : 0;
  n.param = param;
  n.value = std::move(value);
  n.requires_grad = a.requires_grad() || (b && op != Op::masked_row_softmax && b->requires_grad());
  n.aux = std::move(aux);
  return tape.push(std::move(n));
}

std::size_t Tensor::rows() const { return value().rows(); }
std::size_t Tensor::cols() const { return value().cols(); }
const Matrix& Tensor::value() const { return tape_->nodes_[id_].value; }
const Matrix& Tensor::grad() const { return tape_->nodes_[id_].grad; }
bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, "tensor is not a scalar");
  return v[0];
}

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad = Matrix();
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix(n.value.rows(), n.value.cols());
  auto dst = n.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(const Tensor& loss) {
  require(loss.tape() == this, "loss belongs to another tape");
  const std::size_t root = loss.id();
  require(nodes_[root].value.rows() == 1 && nodes_[root].value.cols() == 1,
          "backward requires a scalar loss");
  for (std::size_t i = 0; i <= root; ++i) {
    if (nodes_[i].op != Op::leaf) nodes_[i].grad = Matrix();
  }
  accumulate(root, Matrix(1, 1, 1.0));
  for (std::size_t i = root + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.op == Op::leaf || !n.requires_grad || n.grad.size() == 0) continue;
    propagate(n, n.grad);
  }
}

void Tape::propagate(const Node& n, const Matrix& g) {
  const Matrix& av = nodes_[n.a].value;
  switch (n.op) {
    case Op::leaf:
      return;
    case Op::matmul: {
      const Matrix& bv = nodes_[n.b].value;
      if (nodes_[n.a].requires_grad) {
        Matrix ga(av.rows(), av.cols());
        add_matmul_bt(ga, g, bv);
        accumulate(n.a, ga);
      }
      if (nodes_[n.b].requires_grad) {
        Matrix gb(bv.rows(), bv.cols());
        add_matmul_at(gb, av, g);
        accumulate(n.b, gb);
      }
      return;
    }
    case Op::add:
      accumulate(n.a, g);
      accumulate(n.b, g);
      return;
    case Op::sub: {
      accumulate(n.a, g);
      Matrix neg = g;
      for (double& v : neg.values()) v = -v;
      accumulate(n.b, neg);
      return;
    }
    case Op::scale: {
      Matrix ga = g;
      for (double& v : ga.values()) v *= n.param;
      accumulate(n.a, ga);
      return;
    }
    case Op::hadamard: {
      const Matrix& bv = nodes_[n.b].value;
      Matrix ga(g.rows(), g.cols()), gb(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] = g[i] * bv[i];
        gb[i] = g[i] * av[i];
      }
      accumulate(n.a, ga);
      accumulate(n.b, gb);
      return;
    }
    case Op::transpose: {
      Matrix ga(av.rows(), av.cols());
      for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) ga(i, j) = g(j, i);
      }
      accumulate(n.a, ga);
      return;
    }
    case Op::row_sum:
    case Op::row_mean: {
      const double f = n.op == Op::row_mean ? 1.0 / static_cast<double>(av.rows()) : 1.0;
      Matrix ga(av.rows(), av.cols());
      for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) ga(i, j) = g[j] * f;
      }
      accumulate(n.a, ga);
      return;
    }
    case Op::row_max: {
      Matrix ga(av.rows(), av.cols());
      for (std::size_t j = 0; j < av.cols(); ++j) ga(n.aux[j], j) = g[j];
      accumulate(n.a, ga);
      return;
    }
    case Op::dot: {
      const Matrix& bv = nodes_[n.b].value;
      Matrix ga(av.rows(), av.cols()), gb(av.rows(), av.cols());
      for (std::size_t i = 0; i < av.size(); ++i) {
        ga[i] = g[0] * bv[i];
        gb[i] = g[0] * av[i];
      }
      accumulate(n.a, ga);
      accumulate(n.b, gb);
      return;
    }
    case Op::sigmoid: {
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value[i];
        ga[i] = g[i] * s * (1.0 - s);
      }
      accumulate(n.a, ga);
      return;
    }
    case Op::relu:
    case Op::leaky_relu: {
      const double slope = n.op == Op::relu ? 0.0 : n.param;
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = av[i] > 0.0 ? g[i] : slope * g[i];
      accumulate(n.a, ga);
      return;
    }
    case Op::softmax_beta: {
      double inner = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) inner += n.value[i] * g[i];
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = n.value[i] * (g[i] - inner) / n.param;
      accumulate(n.a, ga);
      return;
    }
    case Op::log1p_exp: {
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * sigmoid(av[i]);
      accumulate(n.a, ga);
      return;
    }
    case Op::outer_sum: {
      const Matrix& bv = nodes_[n.b].value;
      Matrix ga(av.rows(), 1), gb(bv.rows(), 1);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
          ga[i] += g(i, j);
          gb[j] += g(i, j);
        }
      }
      accumulate(n.a, ga);
      accumulate(n.b, gb);
      return;
    }
    case Op::masked_row_softmax: {
      const Matrix& mask = nodes_[n.b].value;
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) inner += n.value(i, j) * g(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j) {
          if (mask(i, j) != 0.0) ga(i, j) = n.value(i, j) * (g(i, j) - inner);
        }
      }
      accumulate(n.a, ga);
      return;
    }
    case Op::slice_rows: {
      Matrix ga(av.rows(), av.cols());
      const std::size_t start = n.aux[0];
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) ga(start + i, j) = g(i, j);
      }
      accumulate(n.a, ga);
      return;
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  return record(Op::matmul, a, &b, 0.0, matmul_values(a.value(), b.value()), {});
}

namespace {

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "add: shape mismatch");
  return record(Op::add, a, &b, 0.0, zip(a.value(), b.value(), std::plus<>()), {});
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "sub: shape mismatch");
  return record(Op::sub, a, &b, 0.0, zip(a.value(), b.value(), std::minus<>()), {});
}

Tensor scale(const Tensor& a, double c) {
  return record(Op::scale, a, nullptr, c, map(a.value(), [c](double x) { return c * x; }), {});
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "hadamard: shape mismatch");
  return record(Op::hadamard, a, &b, 0.0, zip(a.value(), b.value(), std::multiplies<>()), {});
}

Tensor transpose(const Tensor& a) {
  const Matrix& v = a.value();
  Matrix out(v.cols(), v.rows());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) out(j, i) = v(i, j);
  }
  return record(Op::transpose, a, nullptr, 0.0, std::move(out), {});
}

namespace {

Matrix column_sums(const Matrix& v) {
  Matrix out(v.cols(), 1);
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) out[j] += v(i, j);
  }
  return out;
}

}  // namespace

Tensor row_sum(const Tensor& a) {
  require(a.rows() > 0, "row_sum: empty input");
  return record(Op::row_sum, a, nullptr, 0.0, column_sums(a.value()), {});
}

Tensor row_mean(const Tensor& a) {
  require(a.rows() > 0, "row_mean: empty input");
  Matrix out = column_sums(a.value());
  for (double& v : out.values()) v /= static_cast<double>(a.rows());
  return record(Op::row_mean, a, nullptr, 0.0, std::move(out), {});
}

Tensor row_max(const Tensor& a) {
  const Matrix& v = a.value();
  require(v.rows() > 0, "row_max: empty input");
  Matrix out(v.cols(), 1);
  std::vector<std::size_t> arg(v.cols(), 0);
  for (std::size_t j = 0; j < v.cols(); ++j) {
    out[j] = v(0, j);
    for (std::size_t i = 1; i < v.rows(); ++i) {
      if (v(i, j) > out[j]) {
        out[j] = v(i, j);
        arg[j] = i;
      }
    }
  }
  return record(Op::row_max, a, nullptr, 0.0, std::move(out), std::move(arg));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require(a.value().same_shape(b.value()), "dot: shape mismatch");
  return record(Op::dot, a, &b, 0.0, Matrix(1, 1, gnnbias::dot(a.value().values(), b.value().values())), {});
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Tensor sigmoid(const Tensor& a) {
  return record(Op::sigmoid, a, nullptr, 0.0, map(a.value(), [](double x) { return sigmoid(x); }), {});
}

Tensor relu(const Tensor& a) {
  return record(Op::relu, a, nullptr, 0.0, map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {});
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return record(Op::leaky_relu, a, nullptr, slope,
                map(a.value(), [slope](double x) { return x > 0.0 ? x : slope * x; }), {});
}

Tensor softmax_beta(const Tensor& scores, double beta) {
  require(beta > 0.0, "softmax_beta: beta must be positive");
  require(scores.cols() == 1 && scores.rows() > 0, "softmax_beta: expects a nonempty column");
  Matrix t = map(scores.value(), [beta](double s) { return s / beta; });
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : t.values()) hi = std::max(hi, v);
  double z = 0.0;
  for (double& v : t.values()) {
    v = std::exp(v - hi);
    z += v;
  }
  for (double& v : t.values()) v /= z;
  return record(Op::softmax_beta, scores, nullptr, beta, std::move(t), {});
}

Tensor log1p_exp(const Tensor& a) {
  return record(Op::log1p_exp, a, nullptr, 0.0, map(a.value(), [](double x) { return log1p_exp(x); }), {});
}

Tensor outer_sum(const Tensor& u, const Tensor& v) {
  require(u.cols() == 1 && v.cols() == 1, "outer_sum: expects columns");
  Matrix out(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    for (std::size_t j = 0; j < v.rows(); ++j) out(i, j) = u.value()[i] + v.value()[j];
  }
  return record(Op::outer_sum, u, &v, 0.0, std::move(out), {});
}

Tensor masked_row_softmax(const Tensor& scores, const Tensor& mask) {
  require(scores.value().same_shape(mask.value()), "masked_row_softmax: shape mismatch");
  const Matrix& s = scores.value();
  const Matrix& m = mask.value();
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (m(i, j) != 0.0) hi = std::max(hi, s(i, j));
    }
    if (hi == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out(i, j) = std::exp(s(i, j) - hi);
        z += out(i, j);
      }
    }
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) /= z;
  }
  return record(Op::masked_row_softmax, scores, &mask, 0.0, std::move(out), {});
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
  require(start + count <= a.rows(), "slice_rows: range out of bounds");
  const Matrix& v = a.value();
  Matrix out(count, v.cols());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) = v(start + i, j);
  }
  return record(Op::slice_rows, a, nullptr, 0.0, std::move(out), {start});
}

std::vector<Matrix> finite_diff_grad(const std::function<double(const std::vector<Matrix>&)>& f,
                                     std::vector<Matrix> params, double h) {
  require(h > 0.0, "finite_diff_grad: step must be positive");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix g(params[p].rows(), params[p].cols());
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double orig = params[p][i];
      params[p][i] = orig + h;
      const double up = f(params);
      params[p][i] = orig - h;
      const double down = f(params);
      params[p][i] = orig;
      g[i] = (up - down) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace gnnbias::ad
