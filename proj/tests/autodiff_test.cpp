#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "gnnbias/autodiff.hpp"
#include "gnnbias/error.hpp"
#include "support.hpp"

using namespace gnnbias;
using namespace testsupport;

namespace {

using Builder = std::function<ad::Tensor(ad::Tape&, const std::vector<ad::Tensor>&)>;

// Reduces an op output to a scalar with a fixed random weighting, so every
// output coordinate contributes to the checked gradient.
double weighted_sum(const Matrix& out, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
  return s;
}

// Compares backward() against central differences of the forward pass.
void expect_gradients_match(const Builder& build, const std::vector<Matrix>& inputs, std::uint64_t seed,
                            double tol = 1e-6) {
  Rng rng(seed);
  Matrix weights;
  {
    ad::Tape tape;
    std::vector<ad::Tensor> xs;
    for (const auto& m : inputs) xs.push_back(tape.constant(m));
    const auto out = build(tape, xs);
    weights = random_matrix(rng, out.rows(), out.cols(), 1.0);
  }
  ad::Tape tape;
  std::vector<ad::Tensor> xs;
  for (const auto& m : inputs) xs.push_back(tape.variable(m));
  const auto out = build(tape, xs);
  const auto loss = ad::dot(out, tape.constant(weights));
  tape.backward(loss);

  auto f = [&](const std::vector<Matrix>& values) {
    ad::Tape t;
    std::vector<ad::Tensor> ys;
    for (const auto& m : values) ys.push_back(t.constant(m));
    return weighted_sum(build(t, ys).value(), weights);
  };
  const auto numeric = ad::finite_diff_grad(f, inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    ASSERT_EQ(xs[k].grad().rows(), inputs[k].rows());
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double a = xs[k].grad()[i];
      const double n = numeric[k][i];
      EXPECT_NEAR(a, n, tol * std::max(1.0, std::abs(n))) << "input " << k << " coord " << i;
    }
  }
}

}  // namespace

TEST(Autodiff, MatmulAddSubScale) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto a = random_matrix(rng, 3, 4, 1.0);
    const auto b = random_matrix(rng, 4, 2, 1.0);
    const auto c = random_matrix(rng, 3, 2, 1.0);
    expect_gradients_match(
        [](ad::Tape&, const std::vector<ad::Tensor>& x) {
          return ad::scale(ad::sub(ad::add(ad::matmul(x[0], x[1]), x[2]), x[2]), 2.5);
        },
        {a, b, c}, static_cast<std::uint64_t>(t));
  }
}

TEST(Autodiff, HadamardTransposeDot) {
  Rng rng(2);
  const auto a = random_matrix(rng, 3, 2, 1.0);
  const auto b = random_matrix(rng, 3, 2, 1.0);
  expect_gradients_match(
      [](ad::Tape&, const std::vector<ad::Tensor>& x) {
        return ad::add(ad::transpose(ad::hadamard(x[0], x[1])), ad::transpose(x[0]));
      },
      {a, b}, 3);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::dot(x[0], x[1]); }, {a, b}, 4);
}

TEST(Autodiff, RowReductions) {
  Rng rng(3);
  const auto a = random_matrix(rng, 5, 3, 1.0);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::row_sum(x[0]); }, {a}, 1);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::row_mean(x[0]); }, {a}, 2);
  // Random continuous entries have no ties, so the max is differentiable.
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::row_max(x[0]); }, {a}, 3);
}

TEST(Autodiff, RowMaxRoutesTiesToFirstRow) {
  ad::Tape tape;
  const auto x = tape.variable(Matrix(3, 1, std::vector<double>{2.0, 2.0, 1.0}));
  tape.backward(ad::dot(ad::row_max(x), tape.constant(Matrix(1, 1, 1.0))));
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 0.0);
}

TEST(Autodiff, PointwiseNonlinearities) {
  Rng rng(4);
  // Keep relu inputs away from the kink.
  Matrix a = random_matrix(rng, 4, 3, 2.0);
  for (double& v : a.values()) v += v >= 0 ? 0.1 : -0.1;
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::sigmoid(x[0]); }, {a}, 1);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::relu(x[0]); }, {a}, 2);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::leaky_relu(x[0], 0.2); },
                         {a}, 3);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::log1p_exp(x[0]); }, {a}, 4);
}

TEST(Autodiff, SoftmaxBetaValuesAndGradients) {
  Rng rng(5);
  for (double beta : {0.3, 1.0, 4.0}) {
    const auto s = random_matrix(rng, 6, 1, 2.0);
    ad::Tape tape;
    const auto out = ad::softmax_beta(tape.constant(s), beta);
    double z = 0.0;
    for (double v : s.values()) z += std::exp(v / beta);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(out.value()[i], std::exp(s[i] / beta) / z, 1e-14);
    expect_gradients_match(
        [beta](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::softmax_beta(x[0], beta); }, {s}, 7);
  }
}

TEST(Autodiff, SoftmaxIsStableForLargeScores) {
  ad::Tape tape;
  const auto out = ad::softmax_beta(tape.constant(Matrix::column({1000.0, 999.0})), 1.0);
  EXPECT_TRUE(std::isfinite(out.value()[0]));
  EXPECT_NEAR(out.value()[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Autodiff, Log1pExpIsStable) {
  EXPECT_DOUBLE_EQ(ad::log1p_exp(800.0), 800.0);
  EXPECT_NEAR(ad::log1p_exp(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(ad::log1p_exp(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(ad::sigmoid(-800.0), 0.0, 1e-300);
}

TEST(Autodiff, OuterSumAndMaskedSoftmax) {
  Rng rng(6);
  const auto u = random_matrix(rng, 4, 1, 1.0);
  const auto v = random_matrix(rng, 4, 1, 1.0);
  Matrix mask(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    mask(i, i) = 1.0;
    if (i + 1 < 4) mask(i, i + 1) = mask(i + 1, i) = 1.0;
  }
  expect_gradients_match(
      [&](ad::Tape& tape, const std::vector<ad::Tensor>& x) {
        return ad::masked_row_softmax(ad::leaky_relu(ad::outer_sum(x[0], x[1]), 0.2), tape.constant(mask));
      },
      {u, v}, 9);

  ad::Tape tape;
  const auto out = ad::masked_row_softmax(ad::outer_sum(tape.constant(u), tape.constant(v)), tape.constant(mask));
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      if (mask(i, j) == 0.0) EXPECT_EQ(out.value()(i, j), 0.0);
      row += out.value()(i, j);
    }
    EXPECT_NEAR(row, 1.0, 1e-14);
  }
}

TEST(Autodiff, SliceRows) {
  Rng rng(7);
  const auto a = random_matrix(rng, 6, 2, 1.0);
  expect_gradients_match([](ad::Tape&, const std::vector<ad::Tensor>& x) { return ad::slice_rows(x[0], 2, 3); },
                         {a}, 1);
}

TEST(Autodiff, SharedSubexpressionsAccumulate) {
  // f(x) = <x, x> + 3 <x, 1>; df/dx = 2x + 3.
  ad::Tape tape;
  const auto x = tape.variable(Matrix::column({1.0, -2.0, 0.5}));
  const auto ones = tape.constant(Matrix(3, 1, 1.0));
  tape.backward(ad::add(ad::dot(x, x), ad::scale(ad::dot(x, ones), 3.0)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -1.0);
  EXPECT_DOUBLE_EQ(x.grad()[2], 4.0);
}

TEST(Autodiff, LeafGradientsAccumulateUntilZeroed) {
  ad::Tape tape;
  const auto x = tape.variable(Matrix::column({2.0}));
  const auto y = ad::dot(x, x);
  tape.backward(y);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
  tape.zero_grad();
  tape.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  ad::Tape tape;
  const auto c = tape.constant(Matrix::column({1.0, 2.0}));
  const auto x = tape.variable(Matrix::column({3.0, 4.0}));
  tape.backward(ad::dot(c, x));
  EXPECT_FALSE(c.requires_grad());
  EXPECT_TRUE(x.requires_grad());
  EXPECT_DOUBLE_EQ(x.grad()[1], 2.0);
}

TEST(Autodiff, ShapeErrorsThrow) {
  ad::Tape tape;
  const auto a = tape.constant(Matrix(2, 3));
  const auto b = tape.constant(Matrix(2, 3));
  EXPECT_THROW(ad::matmul(a, b), InvalidArgument);
  EXPECT_THROW(tape.backward(a), InvalidArgument);
  EXPECT_THROW(ad::slice_rows(a, 1, 5), InvalidArgument);
}
