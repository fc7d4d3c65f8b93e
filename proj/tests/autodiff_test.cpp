#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mbvd/autodiff/var.hpp"
#include "mbvd/core/errors.hpp"
#include "mbvd/nn/layers.hpp"
#include "support/grad_check.hpp"

namespace mbvd::ad {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = d(rng);
  return m;
}

// Checks d f / d inputs for a scalar-valued expression over Params.
void expect_gradients(const std::function<Var(std::vector<Var>&)>& expr, std::vector<Param>& params,
                      double tol = 1e-6) {
  std::vector<Param*> ptrs;
  for (auto& p : params) {
    p.zero_grad();
    ptrs.push_back(&p);
  }
  auto eval = [&]() {
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(param(p));
    return expr(vars);
  };
  backward(eval());
  const auto result = testing::check_param_grads([&] { NoGradGuard g; return eval().item(); }, ptrs);
  EXPECT_LT(result.max_relative_error, tol) << "worst: " << result.worst;
}

TEST(Autodiff, ElementwiseOpsGradients) {
  std::mt19937_64 rng(1);
  std::vector<Param> params = {Param("a", random_matrix(3, 4, rng)), Param("b", random_matrix(3, 4, rng))};
  expect_gradients(
      [](std::vector<Var>& v) {
        Var y = tanh(v[0]) * sigmoid(v[1]) + square(v[0] - v[1]) + exp(scale(v[1], 0.3)) + elu(v[0]) +
                abs(v[1]) + log(add_scalar(square(v[0]), 1.0)) + relu(v[1]);
        return sum(clamp(y, -50.0, 50.0));
      },
      params);
}

TEST(Autodiff, MatmulLinearAndBroadcastGradients) {
  std::mt19937_64 rng(2);
  std::vector<Param> params = {Param("x", random_matrix(5, 3, rng)), Param("w", random_matrix(3, 4, rng)),
                               Param("b", random_matrix(1, 4, rng)), Param("c", random_matrix(5, 1, rng)),
                               Param("m", random_matrix(4, 2, rng))};
  expect_gradients(
      [](std::vector<Var>& v) {
        Var y = linear(v[0], v[1], v[2]);
        Var z = add_row(matmul(v[0], v[1]), v[2]);
        Var q = mul_col(tanh(y), v[3]);
        return mean(square(matmul(q + z, v[4])));
      },
      params);
}

TEST(Autodiff, StructuralOpsGradients) {
  std::mt19937_64 rng(3);
  std::vector<Param> params = {Param("a", random_matrix(4, 6, rng)), Param("b", random_matrix(4, 2, rng))};
  expect_gradients(
      [](std::vector<Var>& v) {
        Var cat = concat_cols(std::vector<Var>{v[0], v[1]});
        Var rows = concat_rows(std::vector<Var>{slice_rows(cat, 0, 2), slice_rows(cat, 1, 4)});
        Var r = reshape(slice_cols(rows, 1, 7), 6, 5);
        std::vector<int> idx = {0, 4, 2, 3, 1, 0};
        Var g = gather_cols(r, idx);
        return sum(square(g)) + sum(row_sum(tanh(r)));
      },
      params);
}

TEST(Autodiff, GatherRowsGradientsWithRepeats) {
  std::mt19937_64 rng(41);
  std::vector<Param> params = {Param("a", random_matrix(4, 3, rng))};
  expect_gradients(
      [](std::vector<Var>& v) {
        std::vector<std::size_t> idx = {3, 0, 3, 1};
        return sum(square(gather_rows(v[0], idx)));
      },
      params);
}

TEST(Autodiff, RowwiseVecmatGradients) {
  std::mt19937_64 rng(4);
  std::vector<Param> params = {Param("x", random_matrix(3, 4, rng)), Param("w", random_matrix(3, 4 * 5, rng))};
  expect_gradients([](std::vector<Var>& v) { return sum(square(rowwise_vecmat(v[0], v[1]))); }, params);
}

TEST(Autodiff, RowwiseVecmatMatchesPerRowProduct) {
  Matrix x = {{1.0, 2.0}};
  Matrix w = {{1.0, 0.0, 3.0, 0.5, -1.0, 2.0}};  // 2 x 3 : [[1,0,3],[0.5,-1,2]]
  Var y = rowwise_vecmat(constant(x), constant(w));
  EXPECT_DOUBLE_EQ(y.value()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y.value()(0, 1), -2.0);
  EXPECT_DOUBLE_EQ(y.value()(0, 2), 7.0);
}

TEST(Autodiff, DetachBlocksGradient) {
  Param a("a", Matrix{{2.0}});
  Var x = param(a);
  Var y = mul(x, detach(x));
  backward(sum(y));
  EXPECT_DOUBLE_EQ(a.grad[0], 2.0);  // only the non-detached factor contributes
}

TEST(Autodiff, NoGradGuardBuildsNoGraph) {
  Param a("a", Matrix{{1.0, 2.0}});
  {
    NoGradGuard guard;
    Var y = sum(square(param(a)));
    EXPECT_FALSE(y.requires_grad());
    EXPECT_TRUE(y.node()->parents.empty());
  }
  EXPECT_TRUE(grad_enabled());
}

TEST(Autodiff, ParamUsedTwiceAccumulates) {
  Param a("a", Matrix{{3.0}});
  backward(sum(add(param(a), param(a))));
  EXPECT_DOUBLE_EQ(a.grad[0], 2.0);
}

TEST(Autodiff, ShapeMismatchIsUsageError) {
  Var a = constant(Matrix(2, 3));
  Var b = constant(Matrix(3, 2));
  EXPECT_THROW(add(a, b), UsageError);
  EXPECT_THROW(matmul(a, a), UsageError);
  EXPECT_THROW(backward(a), UsageError);
}

TEST(Layers, GruAndMlpGradients) {
  Rng rng(5);
  nn::GruCell gru("gru", 3, 4, rng);
  nn::Mlp mlp("mlp", {4, 6, 2}, nn::Activation::kRelu, rng);
  std::mt19937_64 drng(6);
  const Matrix x0 = random_matrix(2, 3, drng);
  const Matrix x1 = random_matrix(2, 3, drng);
  nn::ParamList params;
  gru.collect(params);
  mlp.collect(params);
  auto eval = [&]() {
    Var h = constant(Matrix(2, 4));
    h = gru.forward(constant(x0), h);
    h = gru.forward(constant(x1), h);
    return sum(square(mlp.forward(h)));
  };
  for (auto* p : params) p->zero_grad();
  backward(eval());
  const auto result = testing::check_param_grads([&] { NoGradGuard g; return eval().item(); }, params);
  EXPECT_LT(result.max_relative_error, 1e-5) << result.worst;
}

TEST(Layers, ZeroLinearOutputsZero) {
  Rng rng(7);
  nn::Linear l("l", 3, 2, rng);
  l.zero();
  Var y = l.forward(constant(Matrix{{1.0, -2.0, 5.0}}));
  EXPECT_EQ(y.value(), Matrix(1, 2));
}

}  // namespace
}  // namespace mbvd::ad
