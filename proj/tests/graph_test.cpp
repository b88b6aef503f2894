// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "vfib/error.hpp"
#include "vfib/gradcheck.hpp"
#include "vfib/graph.hpp"

namespace vfib {
namespace {

TEST(MatMulTest, IdentityLeavesMatrix) {
  Graph g;
  Var eye = g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  Var m = g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  EXPECT_EQ(matmul(eye, m).value(), m.value());
}

TEST(MatMulTest, ZeroAnnihilates) {
  Rng rng(1);
  Graph g;
  Var z = g.zeros({2, 3});
  Var b = g.constant(oracle::random_tensor({3, 4}, rng));
  const Tensor out = matmul(z, b).value();
  EXPECT_EQ(out.shape(), (std::vector<std::size_t>{2, 4}));
  for (double x : out.data()) EXPECT_EQ(x, 0.0);
}

TEST(MatMulTest, MatchesTripleLoopOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    const Tensor a = oracle::random_tensor({3, 3}, rng);
    const Tensor b = oracle::random_tensor({3, 3}, rng);
    const Tensor got = matmul(g.constant(a), g.constant(b)).value();
    const auto want = oracle::matmul(oracle::to_mat(a), oracle::to_mat(b));
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-12);
    }
  }
}

TEST(MatMulTest, ShapeErrorNamesBothShapes) {
  Graph g;
  try {
    matmul(g.zeros({2, 3}), g.zeros({4, 5}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("(2,3)"), std::string::npos) << what;
    EXPECT_NE(what.find("(4,5)"), std::string::npos) << what;
  }
}

TEST(MatMulTest, VectorRightOperandGivesVector) {
  Graph g;
  Var m = g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var v = g.constant(Tensor::vector({1, 1}));
  const Tensor out = matmul(m, v).value();
  EXPECT_EQ(out.rank(), 1u);
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 7.0);
}

TEST(BackwardTest, SumGivesOnes) {
  Rng rng(3);
  Graph g;
  Var w = g.parameter("W", oracle::random_tensor({3, 2}, rng));
  const auto grads = g.backward(sum(w));
  for (double x : grads.at("W").data()) EXPECT_EQ(x, 1.0);
}

TEST(BackwardTest, HalfSquaredNormGivesParameter) {
  Rng rng(4);
  Graph g;
  const Tensor value = oracle::random_tensor({2, 5}, rng);
  Var w = g.parameter("W", value);
  const auto grads = g.backward(scale(sum(mul(w, w)), 0.5));
  const Tensor& gw = grads.at("W");
  for (std::size_t i = 0; i < value.size(); ++i) EXPECT_DOUBLE_EQ(gw[i], value[i]);
}

TEST(BackwardTest, NonScalarLossIsContractError) {
  Graph g;
  Var w = g.parameter("W", Tensor({2}));
  EXPECT_THROW(g.backward(w), ContractError);
}

TEST(BackwardTest, GradientShapeMatchesParameter) {
  Rng rng(5);
  Graph g;
  Var w = g.parameter("W", oracle::random_tensor({4, 3}, rng));
  Var x = g.constant(oracle::random_tensor({3}, rng));
  const auto grads = g.backward(sum(tanh(matmul(w, x))));
  EXPECT_EQ(grads.at("W").shape(), (std::vector<std::size_t>{4, 3}));
}

TEST(BackwardTest, UntouchedParameterGetsZeros) {
  Graph g;
  Var a = g.parameter("a", Tensor::vector({1, 2}));
  g.parameter("b", Tensor::vector({3, 4, 5}));
  const auto grads = g.backward(sum(a));
  for (double x : grads.at("b").data()) EXPECT_EQ(x, 0.0);
}

// For loss = sum(M * (A x)), the gradient w.r.t. A is M x^T and w.r.t. x is
// A^T M: exact for a graph of linear ops.
TEST(BackwardTest, LinearGraphReproducesAnalyticJacobian) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor A = oracle::random_tensor({3, 4}, rng);
    const Tensor x = oracle::random_tensor({4}, rng);
    const Tensor M = oracle::random_tensor({3}, rng);
    Graph g;
    Var a = g.parameter("A", A);
    Var xv = g.parameter("x", x);
    Var loss = sum(mul(g.constant(M), matmul(a, xv)));
    const auto grads = g.backward(loss);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(grads.at("A").at(i, j), M[i] * x[j], 1e-12);
      }
    }
    for (std::size_t j = 0; j < 4; ++j) {
      double want = 0.0;
      for (std::size_t i = 0; i < 3; ++i) want += A.at(i, j) * M[i];
      EXPECT_NEAR(grads.at("x")[j], want, 1e-12);
    }
  }
}

TEST(GraphTest, InputsPrecedeNodes) {
  Rng rng(7);
  Graph g;
  Var w = g.parameter("W", oracle::random_tensor({3, 3}, rng));
  Var x = g.constant(oracle::random_tensor({3}, rng));
  Var y = sigmoid(add(matmul(w, x), x));
  sum(softmax(tanh(y)));
  for (NodeId id = 0; id < g.size(); ++id) {
    for (NodeId in : g.inputs(id)) EXPECT_LT(in, id);
  }
}

TEST(GraphTest, OneNodePerParameter) {
  ModelParams store{{"W", Tensor({2, 2})}};
  Graph g(&store);
  Var a = g.param("W");
  Var b = g.param("W");
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(g.parameters().size(), 1u);
}

TEST(GraphTest, DuplicateParameterIsContractError) {
  Graph g;
  g.parameter("W", Tensor({1}));
  EXPECT_THROW(g.parameter("W", Tensor({1})), ContractError);
}

TEST(GraphTest, UnknownSymbolIsConfigError) {
  ModelParams store;
  Graph g(&store);
  EXPECT_THROW(g.param("missing"), ConfigError);
}

TEST(ActivationTest, TanhAndSigmoidStayInOpenInterval) {
  Rng rng(8);
  Graph g;
  Tensor t({200});
  for (double& x : t.data()) x = rng.uniform(-15, 15);
  Var x = g.constant(t);
  for (double v : tanh(x).value().data()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  for (double v : sigmoid(x).value().data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(ActivationTest, SigmoidExtremesFinite) {
  Graph g;
  const Tensor s = sigmoid(g.constant(Tensor::vector({-800, 800}))).value();
  EXPECT_TRUE(std::isfinite(s[0]));
  EXPECT_TRUE(std::isfinite(s[1]));
}

TEST(CrossEntropyTest, UniformIsLogOfCount) {
  Graph g;
  Var logits = g.constant(Tensor({8}, 0.25));
  EXPECT_NEAR(cross_entropy(logits, 3).value()[0], std::log(8.0), 1e-15);
}

TEST(CrossEntropyTest, CertainPredictionIsZero) {
  Graph g;
  Var logits = g.constant(Tensor::vector({1000, 0, 0}));
  EXPECT_EQ(cross_entropy(logits, 0).value()[0], 0.0);
}

TEST(CrossEntropyTest, MatchesNaiveOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(9);
    const Tensor logits = oracle::random_tensor({n}, rng, -4, 4);
    const std::size_t gold = rng.index(n);
    Graph g;
    const double got = cross_entropy(g.constant(logits), gold).value()[0];
    EXPECT_NEAR(got, oracle::cross_entropy(oracle::to_vec(logits), gold), 1e-10);
  }
}

TEST(CrossEntropyTest, GoldOutOfRangeIsIndexError) {
  Graph g;
  EXPECT_THROW(cross_entropy(g.constant(Tensor({3})), 3), IndexError);
}

TEST(OpsTest, ColumnOutOfRangeIsIndexError) {
  Graph g;
  EXPECT_THROW(column(g.zeros({2, 3}), 3), IndexError);
}

TEST(OpsTest, ConcatAndStack) {
  Graph g;
  const std::array<Var, 2> parts = {g.constant(Tensor::vector({1, 2})),
                                    g.constant(Tensor::vector({3, 4}))};
  EXPECT_EQ(concat(parts).value().values(), (std::vector<double>{1, 2, 3, 4}));
  const Tensor m = stack_columns(parts).value();
  EXPECT_EQ(m.shape(), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(m.at(0, 1), 3.0);
  EXPECT_EQ(m.at(1, 0), 2.0);
}

// Every op's backward rule checked against central differences.
TEST(OpsTest, EveryOpDifferentiatesCorrectly) {
  Rng rng(10);
  ModelParams params{{"A", oracle::random_tensor({3, 4}, rng)},
                     {"B", oracle::random_tensor({4, 3}, rng)},
                     {"v", oracle::random_tensor({3}, rng)},
                     {"w", oracle::random_tensor({4}, rng)}};
  auto loss = [](Graph& g) {
    Var A = g.param("A");
    Var B = g.param("B");
    Var v = g.param("v");
    Var w = g.param("w");
    Var m = add_columns(tanh(matmul(A, B)), v);             // 3x3
    Var t = transpose(m);
    Var c0 = column(t, 0);
    Var c2 = column(m, 2);
    const std::array<Var, 2> cols = {sigmoid(c0), relu(c2)};
    Var s = stack_columns(cols);                            // 3x2
    const std::array<Var, 2> parts = {scale(matmul(B, v), 0.7), w};
    Var cat = concat(parts);                                // 8
    Var p = softmax(mul(cat, cat));
    return add(sum(s), add(sum(p), cross_entropy(matmul(A, w), 1)));
  };
  const GradCheckReport report = grad_check(loss, params, 1e-5);
  for (const auto& [symbol, err] : report.max_relative_error) {
    EXPECT_LT(err, 1e-6) << symbol;
  }
}

}  // namespace
}  // namespace vfib
