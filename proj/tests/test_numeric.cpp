// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <riskseq/ops.hpp>
#include <riskseq/optim.hpp>

#include "gradcheck.hpp"

using namespace riskseq;
using riskseq::testing::max_relative_error;
using riskseq::testing::numeric_gradient;
using riskseq::testing::probe;
using riskseq::testing::random_array;

TEST(Affine, IdentityWeight) {
  auto out = affine(Array::matrix({{1, 2}}), Array::matrix({{1, 0}, {0, 1}}),
                    Array::vector({0, 0}));
  EXPECT_EQ(out, Array::matrix({{1, 2}}));
}

TEST(Affine, HandMultiply) {
  // [1 1] . [[2 3] [4 5]] + [1 1] = [7 9]
  auto out = affine(Array::matrix({{1, 1}}), Array::matrix({{2, 3}, {4, 5}}),
                    Array::vector({1, 1}));
  EXPECT_EQ(out, Array::matrix({{7, 9}}));
}

TEST(Affine, ZeroInputReturnsBias) {
  auto out = affine(Array::matrix({{0, 0}}), Array::matrix({{3, -1}, {8, 2}}),
                    Array::vector({0.25, -4}));
  EXPECT_EQ(out, Array::matrix({{0.25, -4}}));
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  try {
    affine(Array({1, 3}), Array({2, 2}), Array({2}));
    FAIL() << "expected a dimension error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    EXPECT_NE(std::string(e.what()).find("[1x3]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2x2]"), std::string::npos);
  }
}

TEST(Softmax, Examples) {
  auto a = softmax(Array::matrix({{0, 0}}));
  EXPECT_DOUBLE_EQ(a.at(0, 0), 0.5);
  auto b = softmax(Array::matrix({{std::log(1.0), std::log(3.0)}}));
  EXPECT_NEAR(b.at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(b.at(0, 1), 0.75, 1e-15);
  auto c = softmax(Array::matrix({{1000, 1000}}));
  EXPECT_DOUBLE_EQ(c.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.at(0, 1), 0.5);
}

TEST(Softmax, RowsSumToOneForLargeLogits) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Array logits = random_array({3, 6}, rng, 1000.0);
    auto p = softmax(logits);
    for (std::size_t i = 0; i < 3; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_GE(p.at(i, j), 0.0);
        s += p.at(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(BceLoss, Examples) {
  std::vector<int> one{1}, zero{0}, both{0, 1};
  EXPECT_EQ(bce_loss(Array::matrix({{0, 1}}), one).value, 0.0);
  EXPECT_NEAR(bce_loss(Array::matrix({{0.5, 0.5}}), zero).value, std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(Array::matrix({{0.5, 0.5}, {0.5, 0.5}}), both).value, std::log(2.0),
              1e-15);
}

TEST(BceLoss, ClampedAndNonNegative) {
  std::vector<int> one{1};
  // Within eps of a perfect prediction counts as perfect.
  EXPECT_EQ(bce_loss(Array::matrix({{1e-13, 1.0 - 1e-13}}), one).value, 0.0);
  // A totally wrong prediction is finite because of the clamp.
  EXPECT_NEAR(bce_loss(Array::matrix({{1, 0}}), one).value, -std::log(1e-12), 1e-9);
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = softmax(random_array({4, 2}, rng, 5.0));
    std::vector<int> y{0, 1, 1, 0};
    EXPECT_GT(bce_loss(p, y).value, 0.0);
  }
}

TEST(BceLoss, InvalidLabel) {
  std::vector<int> bad{2};
  try {
    bce_loss(Array::matrix({{0.5, 0.5}}), bad);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterSet ps;
  ps.add("w", Array::vector({0.5, -2.0}));
  ps.adam_step({{"w", Array::vector({1.0, 1.0})}}, 0.001);
  const Array after_first = ps.get("w");
  const Array m_before = ps.first_moment("w");
  ps.adam_step({{"w", Array::vector({0.0, 0.0})}}, 0.001);
  EXPECT_EQ(ps.get("w"), after_first);
  EXPECT_EQ(ps.step(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LT(std::abs(ps.first_moment("w")[i]), std::abs(m_before[i]));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // t=1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  ParameterSet ps;
  ps.add("x", Array::vector({0.0}));
  ps.adam_step({{"x", Array::vector({1.0})}}, 0.001);
  EXPECT_NEAR(ps.get("x")[0], -0.001, 1e-10);
}

TEST(Adam, SteadyStateSecondStep) {
  ParameterSet ps;
  ps.add("x", Array::vector({0.0}));
  ps.adam_step({{"x", Array::vector({1.0})}}, 0.001);
  const double first = ps.get("x")[0];
  ps.adam_step({{"x", Array::vector({1.0})}}, 0.001);
  const double second = ps.get("x")[0] - first;
  EXPECT_NEAR(std::abs(second), std::abs(first), 0.1 * std::abs(first));
}

TEST(Adam, UnknownGradientName) {
  ParameterSet ps;
  ps.add("x", Array::vector({0.0}));
  try {
    ps.adam_step({{"y", Array::vector({1.0})}}, 0.001);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Lookup);
  }
  EXPECT_EQ(ps.step(), 0u);
}

TEST(Dropout, IdentityCases) {
  Rng rng(1);
  Array x = random_array({4, 5}, rng);
  EXPECT_EQ(dropout(x, 0.0, 7, true), x);
  EXPECT_EQ(dropout(x, 0.7, 7, false), x);
}

TEST(Dropout, InvertedScalingPreservesMean) {
  Array ones({100000}, 1.0);
  auto out = dropout(ones, 0.5, 42, true);
  double mean = 0.0;
  for (double v : out.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    mean += v;
  }
  mean /= 100000.0;
  EXPECT_GE(mean, 0.98);
  EXPECT_LE(mean, 1.02);
}

TEST(Dropout, RejectsRateOne) {
  EXPECT_THROW(dropout(Array({2}), 1.0, 0, true), Error);
  EXPECT_THROW(dropout(Array({2}), -0.1, 0, true), Error);
}

TEST(Dropout, DeterministicInSeed) {
  Array x({50}, 1.0);
  EXPECT_EQ(dropout(x, 0.3, 9, true), dropout(x, 0.3, 9, true));
  EXPECT_NE(dropout(x, 0.3, 9, true), dropout(x, 0.3, 10, true));
}

// Primitive gradient checks against central differences, 20 random trials each.

TEST(PrimitiveGradients, Affine) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8), din = 1 + rng.below(8), dout = 1 + rng.below(8);
    Array x = random_array({n, din}, rng), w = random_array({din, dout}, rng),
          b = random_array({dout}, rng), probe_w = random_array({n, dout}, rng);
    auto loss = [&] { return probe(affine(x, w, b), probe_w); };
    auto g = affine_backward(x, w, probe_w);
    EXPECT_LT(max_relative_error(g.input, numeric_gradient(x, loss)), 1e-4);
    EXPECT_LT(max_relative_error(g.weight, numeric_gradient(w, loss)), 1e-4);
    EXPECT_LT(max_relative_error(g.bias, numeric_gradient(b, loss)), 1e-4);
  }
}

TEST(PrimitiveGradients, SoftmaxSigmoidTanh) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8), k = 2 + rng.below(7);
    Array x = random_array({n, k}, rng, 3.0), pw = random_array({n, k}, rng);
    auto sm = [&] { return probe(softmax(x), pw); };
    EXPECT_LT(max_relative_error(softmax_backward(softmax(x), pw), numeric_gradient(x, sm)),
              1e-4);
    auto sg = [&] { return probe(riskseq::sigmoid(x), pw); };
    EXPECT_LT(max_relative_error(sigmoid_backward(riskseq::sigmoid(x), pw),
                                 numeric_gradient(x, sg)),
              1e-4);
    auto th = [&] { return probe(riskseq::tanh(x), pw); };
    EXPECT_LT(max_relative_error(tanh_backward(riskseq::tanh(x), pw), numeric_gradient(x, th)),
              1e-4);
  }
}

TEST(PrimitiveGradients, BceThroughSoftmax) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    Array logits = random_array({n, 2}, rng, 3.0);
    std::vector<int> y(n);
    for (auto &v : y)
      v = static_cast<int>(rng.below(2));
    auto loss = [&] { return bce_loss(softmax(logits), y).value; };
    auto p = softmax(logits);
    auto analytic = softmax_backward(p, bce_loss_grad(p, y));
    EXPECT_LT(max_relative_error(analytic, numeric_gradient(logits, loss)), 1e-4);
  }
}

TEST(PrimitiveGradients, DropoutWithFixedMask) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    Array x = random_array({1 + rng.below(8), 1 + rng.below(8)}, rng);
    Array pw = random_array(x.shape(), rng);
    Array mask;
    dropout(x, 0.4, 100 + trial, true, &mask);
    auto loss = [&] { return probe(dropout(x, 0.4, 100 + trial, true), pw); };
    EXPECT_LT(max_relative_error(multiply(pw, mask), numeric_gradient(x, loss)), 1e-4);
  }
}

TEST(ClipGlobalNorm, ScalesDownOnly) {
  GradientMap g{{"a", Array::vector({3, 4})}};
  clip_global_norm(g, 10.0);
  EXPECT_EQ(g["a"], Array::vector({3, 4}));
  clip_global_norm(g, 1.0);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-15);
}
