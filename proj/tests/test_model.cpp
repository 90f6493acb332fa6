// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include <riskseq/model.hpp>

#include "gradcheck.hpp"
#include "model_fixtures.hpp"

using namespace riskseq;
using riskseq::testing::max_relative_error;
using riskseq::testing::numeric_gradient;
using riskseq::testing::probe;
using riskseq::testing::random_array;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::uint8_t> full_mask(std::size_t b, std::size_t L) {
  return std::vector<std::uint8_t>(b * L, 1);
}

} // namespace

TEST(Lstm, FullyMaskedRowIsZero) {
  Rng rng(1);
  Array W = random_array({3, 8}, rng), U = random_array({2, 8}, rng), b = random_array({8}, rng);
  Array x = random_array({2, 4, 3}, rng);
  std::vector<std::uint8_t> mask{1, 1, 0, 0, 0, 0, 0, 0};
  auto H = lstm_forward(W, U, b, x, mask);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_EQ(H.at(1, t, k), 0.0);
}

TEST(Lstm, ZeroParametersGiveZeroStates) {
  Rng rng(2);
  Array x = random_array({2, 3, 5}, rng);
  auto H = lstm_forward(Array({5, 16}), Array({4, 16}), Array({16}), x, full_mask(2, 3));
  for (double v : H.values())
    EXPECT_EQ(v, 0.0);
}

TEST(Lstm, HandUnrolledTwoSteps) {
  // h = 1, d = 1; gate order (input, forget, cell, output).
  const double wi = 0.5, wf = -0.3, wg = 0.8, wo = 0.1;
  const double ui = 0.2, uf = 0.4, ug = -0.6, uo = 0.7;
  const double bi = 0.1, bf = 0.2, bg = -0.1, bo = 0.05;
  const double x1 = 1.5, x2 = -0.7;
  Array W = Array::matrix({{wi, wf, wg, wo}});
  Array U = Array::matrix({{ui, uf, ug, uo}});
  Array b = Array::vector({bi, bf, bg, bo});
  Array x({1, 2, 1}, std::vector<double>{x1, x2});

  double h = 0, c = 0;
  std::vector<double> expected;
  for (double xt : {x1, x2}) {
    const double i = sig(wi * xt + ui * h + bi);
    const double f = sig(wf * xt + uf * h + bf);
    const double g = std::tanh(wg * xt + ug * h + bg);
    const double o = sig(wo * xt + uo * h + bo);
    c = f * c + i * g;
    h = o * std::tanh(c);
    expected.push_back(h);
  }
  auto H = lstm_forward(W, U, b, x, full_mask(1, 2));
  EXPECT_NEAR(H.at(0, 0, 0), expected[0], 1e-15);
  EXPECT_NEAR(H.at(0, 1, 0), expected[1], 1e-15);
}

TEST(Gru, FullyMaskedRowAndZeroParameters) {
  Rng rng(3);
  Array x = random_array({2, 3, 4}, rng);
  std::vector<std::uint8_t> mask{1, 1, 1, 0, 0, 0};
  auto H0 = gru_forward(Array({4, 9}), Array({3, 9}), Array({9}), x, full_mask(2, 3));
  for (double v : H0.values())
    EXPECT_EQ(v, 0.0);
  auto H = gru_forward(random_array({4, 9}, rng), random_array({3, 9}, rng),
                       random_array({9}, rng), x, mask);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_EQ(H.at(1, t, k), 0.0);
}

TEST(Gru, HandSingleStep) {
  // Gate order (update, reset, candidate); from h0 = 0 the reset gate has no effect.
  const double wz = 0.7, wr = -0.4, wn = 1.1, bz = 0.1, br = 0.3, bn = -0.2, x = 0.9;
  Array W = Array::matrix({{wz, wr, wn}});
  Array U = Array::matrix({{0.5, 0.6, -0.8}});
  Array b = Array::vector({bz, br, bn});
  const double z = sig(wz * x + bz);
  const double n = std::tanh(wn * x + bn);
  const double expected = z * n;
  auto H = gru_forward(W, U, b, Array({1, 1, 1}, std::vector<double>{x}), full_mask(1, 1));
  EXPECT_NEAR(H.at(0, 0, 0), expected, 1e-15);
}

TEST(Fuse, Identities) {
  Rng rng(4);
  Array a = random_array({2, 3, 4}, rng), e = random_array({2, 3, 4}, rng);
  EXPECT_EQ(fuse(a, Array(a.shape(), 1.0)), a);
  const Array zeroed = fuse(a, Array(a.shape()));
  for (double v : zeroed.values())
    EXPECT_EQ(v, 0.0);
  auto f = fuse(a, e);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(f[i], a[i] * e[i]);
  EXPECT_THROW(fuse(a, Array({2, 3, 5})), Error);
}

TEST(ApplyDecay, Examples) {
  Rng rng(5);
  Array H = random_array({1, 2, 2}, rng);
  EXPECT_EQ(apply_decay(H, Array({1, 2}, 1.0)), H);
  const Array silenced = apply_decay(H, Array({1, 2}));
  for (double v : silenced.values())
    EXPECT_EQ(v, 0.0);
  auto D = apply_decay(H, Array({1, 2}, std::vector<double>{1.0, std::exp(-1.0)}));
  EXPECT_EQ(D.at(0, 0, 0), H.at(0, 0, 0));
  EXPECT_EQ(D.at(0, 1, 0), H.at(0, 1, 0) * std::exp(-1.0));
  EXPECT_EQ(D.at(0, 1, 1), H.at(0, 1, 1) * std::exp(-1.0));
  try {
    apply_decay(H, Array({1, 2}, std::vector<double>{1.0, 1.5}));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(AttentionPool, Examples) {
  Rng rng(6);
  Array W = random_array({3, 3}, rng), b = random_array({3}, rng), v = random_array({3}, rng);
  // L = 1.
  Array H1 = random_array({1, 1, 3}, rng);
  std::vector<std::uint8_t> m1{1};
  auto a1 = attention_pool(H1, m1, W, b, v);
  EXPECT_EQ(a1.weights.at(0, 0), 1.0);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_DOUBLE_EQ(a1.output.at(0, k), H1.at(0, 0, k));
  // Identical states: uniform weights over the valid steps, zero on padding.
  Array H({1, 5, 3});
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t k = 0; k < 3; ++k)
      H.at(0, t, k) = 0.1 * static_cast<double>(k + 1);
  std::vector<std::uint8_t> m{1, 1, 1, 0, 0};
  auto a = attention_pool(H, m, W, b, v);
  for (std::size_t t = 0; t < 3; ++t)
    EXPECT_NEAR(a.weights.at(0, t), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(a.weights.at(0, 3), 0.0);
  EXPECT_EQ(a.weights.at(0, 4), 0.0);
  std::vector<std::uint8_t> none{0, 0, 0, 0, 0};
  try {
    attention_pool(H, none, W, b, v);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(MeanPool, Examples) {
  std::vector<std::uint8_t> one{1}, two{1, 1};
  Array H1({1, 1, 2}, std::vector<double>{0.3, -0.2});
  EXPECT_EQ(mean_pool(H1, one), Array::matrix({{0.3, -0.2}}));
  Array same({1, 2, 1}, std::vector<double>{0.7, 0.7});
  EXPECT_EQ(mean_pool(same, two).at(0, 0), 0.7);
  Array H({1, 2, 1}, std::vector<double>{1.0, 3.0});
  EXPECT_EQ(mean_pool(H, two).at(0, 0), 2.0);
  std::vector<std::uint8_t> none{0, 0};
  EXPECT_THROW(mean_pool(H, none), Error);
}

// Layer-level gradient checks: random shapes up to 8, 20 trials, probe loss.

TEST(LayerGradients, RecurrentCells) {
  Rng rng(21);
  for (CellType cell : {CellType::LSTM, CellType::GRU}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t B = 1 + rng.below(3), L = 1 + rng.below(5), d = 1 + rng.below(8),
                        h = 1 + rng.below(8);
      const std::size_t gh = gate_count(cell) * h;
      Array W = random_array({d, gh}, rng), U = random_array({h, gh}, rng),
            b = random_array({gh}, rng), x = random_array({B, L, d}, rng);
      std::vector<std::uint8_t> mask(B * L, 1);
      for (std::size_t i = 0; i < B; ++i) {
        const std::size_t len = 1 + rng.below(L);
        for (std::size_t t = len; t < L; ++t)
          mask[i * L + t] = 0;
      }
      Array pw = random_array({B, L, h}, rng);
      auto loss = [&] { return probe(recurrent_forward(cell, W, U, b, x, mask).hidden, pw); };
      auto cache = recurrent_forward(cell, W, U, b, x, mask);
      auto g = recurrent_backward(W, U, b, x, mask, cache, pw);
      EXPECT_LT(max_relative_error(g.W, numeric_gradient(W, loss)), 1e-4);
      EXPECT_LT(max_relative_error(g.U, numeric_gradient(U, loss)), 1e-4);
      EXPECT_LT(max_relative_error(g.b, numeric_gradient(b, loss)), 1e-4);
      EXPECT_LT(max_relative_error(g.inputs, numeric_gradient(x, loss)), 1e-4);
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t t = 0; t < L; ++t)
          if (!mask[i * L + t]) {
            for (double v : g.inputs.row(i, t))
              EXPECT_EQ(v, 0.0);
          }
    }
  }
}

TEST(LayerGradients, AttentionAndPooling) {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = 1 + rng.below(3), L = 1 + rng.below(6), h = 1 + rng.below(8),
                      a = 1 + rng.below(8);
    Array H = random_array({B, L, h}, rng), W = random_array({h, a}, rng),
          b = random_array({a}, rng), v = random_array({a}, rng);
    std::vector<std::uint8_t> mask(B * L, 1);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t t = 1 + rng.below(L); t < L; ++t)
        mask[i * L + t] = 0;
    Array pw = random_array({B, h}, rng);
    auto loss = [&] { return probe(attention_pool(H, mask, W, b, v).output, pw); };
    auto cache = attention_pool(H, mask, W, b, v);
    auto g = attention_pool_backward(H, mask, W, v, cache, pw);
    EXPECT_LT(max_relative_error(g.W, numeric_gradient(W, loss)), 1e-4);
    EXPECT_LT(max_relative_error(g.b, numeric_gradient(b, loss)), 1e-4);
    EXPECT_LT(max_relative_error(g.v, numeric_gradient(v, loss)), 1e-4);
    EXPECT_LT(max_relative_error(g.hidden, numeric_gradient(H, loss)), 1e-4);

    auto mean_loss = [&] { return probe(mean_pool(H, mask), pw); };
    EXPECT_LT(max_relative_error(mean_pool_backward(H.shape(), mask, pw),
                                 numeric_gradient(H, mean_loss)),
              1e-4);
    auto last_loss = [&] { return probe(last_pool(H, mask), pw); };
    EXPECT_LT(max_relative_error(last_pool_backward(H.shape(), mask, pw),
                                 numeric_gradient(H, last_loss)),
              1e-4);
  }
}

TEST(LayerGradients, FuseAndDecay) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = 1 + rng.below(4), L = 1 + rng.below(6), h = 1 + rng.below(8);
    Array A = random_array({B, L, h}, rng), E = random_array({B, L, h}, rng);
    Array decay({B, L});
    for (double &d : decay.values())
      d = rng.uniform();
    Array pw = random_array({B, L, h}, rng);
    auto fl = [&] { return probe(fuse(A, E), pw); };
    EXPECT_LT(max_relative_error(multiply(pw, E), numeric_gradient(A, fl)), 1e-4);
    auto dl = [&] { return probe(apply_decay(A, decay), pw); };
    EXPECT_LT(max_relative_error(apply_decay_backward(decay, pw), numeric_gradient(A, dl)),
              1e-4);
  }
}

TEST(TextBaseline, Examples) {
  ModelConfig cfg = ModelConfig::for_architecture(Architecture::TextBaseline, 2, 4);
  ParameterSet ps;
  ps.add(param::kHeadW, Array({2, 2}));
  ps.add(param::kHeadB, Array({2}));
  auto y0 = text_baseline_forward(ps, Array::vector({0.3, -1.0}));
  EXPECT_EQ(y0.at(0, 0), 0.5);
  EXPECT_EQ(y0.at(0, 1), 0.5);

  ParameterSet hand;
  hand.add(param::kHeadW, Array::matrix({{1.0, -1.0}, {0.5, 2.0}}));
  hand.add(param::kHeadB, Array::vector({0.1, -0.2}));
  const double l0 = 0.6 * 1.0 + 0.8 * 0.5 + 0.1, l1 = 0.6 * -1.0 + 0.8 * 2.0 - 0.2;
  const double p1 = std::exp(l1) / (std::exp(l0) + std::exp(l1));
  auto y = text_baseline_forward(hand, Array::vector({0.6, 0.8}));
  EXPECT_NEAR(y.at(0, 1), p1, 1e-15);

  // Swapping the class columns swaps the probabilities.
  ParameterSet swapped;
  swapped.add(param::kHeadW, Array::matrix({{-1.0, 1.0}, {2.0, 0.5}}));
  swapped.add(param::kHeadB, Array::vector({-0.2, 0.1}));
  auto ys = text_baseline_forward(swapped, Array::vector({0.6, 0.8}));
  EXPECT_NEAR(ys.at(0, 0), y.at(0, 1), 1e-15);
  EXPECT_THROW(text_baseline_forward(hand, Array::vector({1, 2, 3})), Error);
  (void)cfg;
}

TEST(ModelConfig, FlagsMustMatchArchitecture) {
  auto cfg = ModelConfig::for_architecture(Architecture::LSTMTd);
  EXPECT_NO_THROW(cfg.validate());
  cfg.use_attention = true;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(parse_architecture("EmoLSTMTdA"), Architecture::EmoLSTMTdA);
  EXPECT_THROW(parse_architecture("BLUE"), Error);
}

class AllArchitectures : public ::testing::TestWithParam<Architecture> {};

TEST_P(AllArchitectures, GradientsMatchFiniteDifferences) {
  const Architecture arch = GetParam();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto check = riskseq::testing::model_gradient_check(arch, seed);
    EXPECT_LT(check.max_param_error, 1e-4) << to_string(arch) << " seed " << seed;
    EXPECT_LT(check.max_input_error, 1e-4) << to_string(arch) << " seed " << seed;
    EXPECT_TRUE(check.padding_gradients_zero);
  }
}

TEST_P(AllArchitectures, ForwardIsDeterministicAndWellFormed) {
  const Architecture arch = GetParam();
  auto fx = riskseq::testing::make_fixture(arch, 3);
  auto a = forward(fx.config, fx.params, fx.batch);
  auto b = forward(fx.config, fx.params, fx.batch);
  EXPECT_EQ(a.Y, b.Y);
  for (std::size_t i = 0; i < a.Y.dim(0); ++i)
    EXPECT_NEAR(a.Y.at(i, 0) + a.Y.at(i, 1), 1.0, 1e-15);
  if (fx.config.use_attention) {
    for (std::size_t i = 0; i < fx.batch.batch_size(); ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < fx.batch.max_length(); ++t) {
        const double w = a.attention_weights.at(i, t);
        EXPECT_GE(w, 0.0);
        if (!fx.batch.valid(i, t)) {
          EXPECT_EQ(w, 0.0);
        }
        s += w;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST_P(AllArchitectures, PaddingInvariance) {
  const Architecture arch = GetParam();
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_TRUE(riskseq::testing::padding_invariant(arch, seed)) << to_string(arch);
}

INSTANTIATE_TEST_SUITE_P(Model, AllArchitectures, ::testing::ValuesIn(kAllArchitectures),
                         [](const auto &info) { return std::string(to_string(info.param)); });

TEST(Reductions, EmotionOnesAndUnitDecay) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = riskseq::testing::reduction_gaps(seed);
    EXPECT_EQ(r.emotion_gap, 0.0);
    EXPECT_EQ(r.emotion_attention_gap, 0.0);
    EXPECT_EQ(r.decay_gap, 0.0);
    EXPECT_EQ(r.gru_decay_gap, 0.0);
  }
}

TEST(Backward, ZeroLossGivesZeroGradients) {
  auto fx = riskseq::testing::make_fixture(Architecture::LSTMTd, 4);
  // Saturate the head so each user is predicted perfectly.
  auto &bias = fx.params.get_mutable(param::kHeadB);
  bias[0] = -200.0;
  bias[1] = 200.0;
  std::vector<int> targets(fx.batch.batch_size(), 1);
  auto trace = forward(fx.config, fx.params, fx.batch);
  EXPECT_EQ(bce_loss(trace.Y, targets).value, 0.0);
  auto grads = backward(fx.config, fx.params, trace, targets);
  for (const auto &[name, g] : grads.params)
    for (double v : g.values())
      EXPECT_LE(std::abs(v), 1e-8) << name;
}

TEST(Backward, RejectsForeignTrace) {
  auto fx = riskseq::testing::make_fixture(Architecture::LSTMTd, 4);
  auto trace = forward(fx.config, fx.params, fx.batch);
  auto other = fx.config;
  other.architecture = Architecture::LSTM;
  other.use_decay = false;
  EXPECT_THROW(backward(other, fx.params, trace, fx.batch.labels), Error);
  ForwardTrace empty;
  EXPECT_THROW(backward(fx.config, fx.params, empty, fx.batch.labels), Error);
}

TEST(MonotoneDecay, ContributionScalesWithFactor) {
  // With the weights of a recomputed attention pass held fixed, the share of
  // att_out from one timestep is weight * decay * H, so its norm is linear in
  // the decay factor.
  auto fx = riskseq::testing::make_fixture(Architecture::LSTMTdA, 8);
  const std::size_t t = 1;
  double previous = std::numeric_limits<double>::infinity();
  for (double factor : {1.0, 0.75, 0.5, 0.25, 0.1, 0.0}) {
    auto batch = fx.batch;
    batch.decay.at(0, t) = factor;
    auto trace = forward(fx.config, fx.params, batch);
    const double w = trace.attention_weights.at(0, t);
    double norm = 0.0;
    for (double v : trace.fused.row(0, t))
      norm += (w * factor * v) * (w * factor * v);
    norm = std::sqrt(norm);
    EXPECT_LE(norm, previous);
    previous = norm;
    if (factor == 0.0) {
      EXPECT_EQ(norm, 0.0);
    }
  }
}
