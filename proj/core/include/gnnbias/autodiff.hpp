#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "gnnbias/matrix.hpp"

namespace gnnbias::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape lives. Column vectors have shape (n, 1), scalars (1, 1).
class Tensor {
 public:
  Tensor() = default;

  std::size_t rows() const;
  std::size_t cols() const;
  const Matrix& value() const;
  /// Accumulated gradient; empty before the first backward pass.
  const Matrix& grad() const;
  bool requires_grad() const;
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class Op : std::uint8_t {
  leaf,
  matmul,
  add,
  sub,
  scale,
  hadamard,
  transpose,
  row_sum,
  row_mean,
  row_max,
  dot,
  sigmoid,
  relu,
  leaky_relu,
  softmax_beta,
  log1p_exp,
  outer_sum,
  masked_row_softmax,
  slice_rows,
};

/// Append-only record of one evaluation. Nodes are stored in creation order,
/// which is a topological order, so backward is a single reverse sweep.
/// A tape belongs to one evaluation context; use one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Tensor variable(Matrix value);
  Tensor constant(Matrix value);

  /// Populates grads of every node reachable from `loss`. Leaf gradients
  /// accumulate across calls until zero_grad(); intermediate gradients are
  /// recomputed each call. Throws InvalidArgument for a non-scalar loss.
  void backward(const Tensor& loss);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Tensor;
  friend Tensor record(Op op, const Tensor& a, const Tensor* b, double param, Matrix value,
                       std::vector<std::size_t> aux);

  struct Node {
    Op op = Op::leaf;
    std::size_t a = 0;
    std::size_t b = 0;
    bool has_b = false;
    double param = 0.0;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> aux;
  };

  Tensor push(Node node);
  void propagate(const Node& node, const Matrix& g);
  void accumulate(std::size_t id, const Matrix& g);

  std::vector<Node> nodes_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Sum of the rows of an (n, d) matrix as a (d, 1) column.
Tensor row_sum(const Tensor& a);
/// Mean of the rows of an (n, d) matrix as a (d, 1) column.
Tensor row_mean(const Tensor& a);
/// Coordinate-wise max over rows as a (d, 1) column. The backward pass
/// routes each coordinate's gradient to the first row attaining the max.
Tensor row_max(const Tensor& a);
/// Inner product of two equally shaped tensors, as a (1, 1) scalar.
Tensor dot(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
/// exp(s_i / beta) / sum_j exp(s_j / beta) over an (n, 1) column, evaluated
/// as a plain softmax of s / beta with max subtraction.
Tensor softmax_beta(const Tensor& scores, double beta);
/// log(1 + exp(x)), elementwise, stable for large |x|.
Tensor log1p_exp(const Tensor& a);
/// E(i, j) = u_i + v_j for columns u (n, 1) and v (m, 1).
Tensor outer_sum(const Tensor& u, const Tensor& v);
/// Row-wise softmax restricted to entries where `mask` is nonzero; masked
/// entries are 0. The mask is treated as a constant.
Tensor masked_row_softmax(const Tensor& scores, const Tensor& mask);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);

/// Plain double helpers shared with the closed-form oracles.
double sigmoid(double x);
double log1p_exp(double x);

/// Central differences (f(p + h e) - f(p - h e)) / 2h, one coordinate at a
/// time. `params` is taken by value and restored before each evaluation.
std::vector<Matrix> finite_diff_grad(const std::function<double(const std::vector<Matrix>&)>& f,
                                     std::vector<Matrix> params, double h = 1e-5);

}  // namespace gnnbias::ad
