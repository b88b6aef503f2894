// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include <cmath>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "vfib/encoder.hpp"
#include "vfib/error.hpp"

namespace vfib {
namespace {

constexpr EncoderDims kDims{.vocab = 12, .embed = 5, .hidden = 6, .output = 7};

ModelParams random_encoder(Rng& rng, EncoderKind kind = EncoderKind::kFull) {
  ModelParams p;
  init_encoder_params(p, kDims, kind, rng);
  oracle::randomize(p, rng);
  return p;
}

ModelParams zero_encoder(EncoderKind kind = EncoderKind::kFull) {
  Rng rng(0);
  ModelParams p;
  init_encoder_params(p, kDims, kind, rng);
  for (auto& [symbol, t] : p) t = Tensor(t.shape());
  return p;
}

TEST(EncoderParamsTest, ShapesAndIndependence) {
  Rng rng(1);
  ModelParams p;
  init_encoder_params(p, kDims, EncoderKind::kFull, rng);
  EXPECT_EQ(p.at(sym::kEmbed1).shape(), (std::vector<std::size_t>{5, 12}));
  EXPECT_EQ(p.at(sym::kMemory).shape(), (std::vector<std::size_t>{6, 5}));
  EXPECT_EQ(p.at(sym::kCombine).shape(), (std::vector<std::size_t>{7, 24}));
  EXPECT_NE(p.at(sym::kEmbed1), p.at(sym::kEmbed2));
  EXPECT_NE(p.at(sym::kLstm1Lr + ".W_i"), p.at(sym::kLstm2Lr + ".W_i"));
  for (const auto& prefix : {sym::kLstm1Lr, sym::kLstm1Rl, sym::kLstm2Lr, sym::kLstm2Rl}) {
    for (const auto& s : lstm_symbols(prefix)) EXPECT_TRUE(p.contains(s)) << s;
  }
}

TEST(EncoderParamsTest, BaselineCombinerWidths) {
  Rng rng(2);
  ModelParams left;
  init_encoder_params(left, kDims, EncoderKind::kLeftOnly, rng);
  EXPECT_EQ(left.at(sym::kCombine).shape()[1], 6u);
  EXPECT_FALSE(left.contains(sym::kMemory));
  ModelParams bi;
  init_encoder_params(bi, kDims, EncoderKind::kBiLstm, rng);
  EXPECT_EQ(bi.at(sym::kCombine).shape()[1], 12u);
}

TEST(Stage1Test, EmptyFragmentsGiveZero) {
  Rng rng(3);
  const ModelParams p = random_encoder(rng);
  Graph g(&p);
  const auto [l, r] = encode_stage1(g, FragmentPair{});
  for (double x : l.value().data()) EXPECT_EQ(x, 0.0);
  for (double x : r.value().data()) EXPECT_EQ(x, 0.0);
}

TEST(Stage1Test, ZeroParamsGiveZero) {
  const ModelParams p = zero_encoder();
  Graph g(&p);
  const auto [l, r] = encode_stage1(g, FragmentPair{{1, 2, 3}, {4}});
  for (double x : l.value().data()) EXPECT_EQ(x, 0.0);
  for (double x : r.value().data()) EXPECT_EQ(x, 0.0);
}

TEST(Stage1Test, MatchesUnrolledOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = random_encoder(rng);
    FragmentPair pair = oracle::random_pair(rng, 5, kDims.vocab);
    pair.left = {rng.index(12), rng.index(12), rng.index(12)};
    Graph g(&p);
    const auto [l, r] = encode_stage1(g, pair);
    const auto want = oracle::encoder(p, pair);
    EXPECT_LT(oracle::max_diff(l.value(), want.u1_l), 1e-10);
    EXPECT_LT(oracle::max_diff(r.value(), want.u1_r), 1e-10);
  }
}

TEST(MemoryTest, ZeroLeftSummaryGivesZeroRightMemory) {
  Rng rng(5);
  const ModelParams p = random_encoder(rng);
  Graph g(&p);
  const auto [mu_l, mu_r] =
      compute_memories(g, g.zeros({6}), g.constant(oracle::random_tensor({6}, rng)));
  for (double x : mu_r.value().data()) EXPECT_EQ(x, 0.0);
  EXPECT_GT(oracle::max_diff(mu_l.value(), oracle::Vec(5, 0.0)), 0.0);
}

TEST(MemoryTest, MatchesTripleLoopOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = random_encoder(rng);
    const FragmentPair pair = oracle::random_pair(rng, 4, kDims.vocab);
    Graph g(&p);
    const auto [u1_l, u1_r] = encode_stage1(g, pair);
    const auto [mu_l, mu_r] = compute_memories(g, u1_l, u1_r);
    const auto want = oracle::encoder(p, pair);
    EXPECT_LT(oracle::max_diff(mu_l.value(), want.mu_l), 1e-10);
    EXPECT_LT(oracle::max_diff(mu_r.value(), want.mu_r), 1e-10);
  }
}

TEST(Stage2Test, EmptyLeftFragmentIsTwoMemories) {
  Rng rng(7);
  const ModelParams p = random_encoder(rng);
  Graph g(&p);
  const FragmentPair pair{{}, {3, 4}};
  const auto [u1_l, u1_r] = encode_stage1(g, pair);
  const auto [mu_l, mu_r] = compute_memories(g, u1_l, u1_r);
  const auto [q_l, q_r] = build_stage2_sequences(g, pair, mu_l, mu_r);
  ASSERT_EQ(q_l.size(), 2u);
  EXPECT_EQ(q_l[0].value(), mu_l.value());
  EXPECT_EQ(q_l[1].value(), mu_l.value());
  EXPECT_EQ(q_r.size(), 4u);
}

TEST(Stage2Test, MiddleTokensUseSecondEmbedding) {
  Rng rng(8);
  const ModelParams p = random_encoder(rng);
  Graph g(&p);
  const FragmentPair pair{{1, 2, 3}, {}};
  const auto [q_l, q_r] = build_stage2_sequences(g, pair, g.zeros({5}), g.zeros({5}));
  ASSERT_EQ(q_l.size(), 5u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto want = oracle::column(p.at(sym::kEmbed2), pair.left[i]);
    EXPECT_EQ(oracle::max_diff(q_l[i + 1].value(), want), 0.0);
    EXPECT_GT(oracle::max_diff(q_l[i + 1].value(),
                               oracle::column(p.at(sym::kEmbed1), pair.left[i])), 0.0);
  }
}

TEST(Stage2Test, LengthsGrowByTwoForAllFragments) {
  Rng rng(9);
  const ModelParams p = random_encoder(rng);
  for (int trial = 0; trial < 2000; ++trial) {
    const FragmentPair pair = oracle::random_pair(rng, 8, kDims.vocab);
    Graph g(&p);
    const auto [q_l, q_r] = build_stage2_sequences(g, pair, g.zeros({5}), g.zeros({5}));
    EXPECT_EQ(q_l.size(), pair.left.size() + 2);
    EXPECT_EQ(q_r.size(), pair.right.size() + 2);
  }
}

TEST(SourceSentenceTest, ZeroParamsGiveZero) {
  const ModelParams p = zero_encoder();
  Graph g(&p);
  for (double x : encode_source_sentence(g, FragmentPair{{1, 2}, {3}}).value().data()) {
    EXPECT_EQ(x, 0.0);
  }
}

TEST(SourceSentenceTest, MatchesCompositionOracle) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = random_encoder(rng);
    const FragmentPair pair = oracle::random_pair(rng, 6, kDims.vocab);
    Graph g(&p);
    const Tensor u = encode_source_sentence(g, pair).value();
    EXPECT_LT(oracle::max_diff(u, oracle::encoder(p, pair).u_q), 1e-10);
    for (double x : u.data()) EXPECT_LT(std::abs(x), 1.0);
  }
}

// Strictness is lost to rounding once tanh saturates, so only |u| <= 1 here.
TEST(SourceSentenceTest, BoundedForLargeWeights) {
  Rng rng(11);
  ModelParams p = random_encoder(rng);
  oracle::randomize(p, rng, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g(&p);
    const Tensor u = encode_source_sentence(g, oracle::random_pair(rng, 6, kDims.vocab)).value();
    for (double x : u.data()) EXPECT_LE(std::abs(x), 1.0);
  }
}

Var stage2_left(Graph& g, const FragmentPair& pair) {
  const auto [u1_l, u1_r] = encode_stage1(g, pair);
  const auto [mu_l, mu_r] = compute_memories(g, u1_l, u1_r);
  const auto [q_l, q_r] = build_stage2_sequences(g, pair, mu_l, mu_r);
  return lstm_sequence(g, LstmVars::bind(g, sym::kLstm2Lr), q_l);
}

TEST(MemoryCouplingTest, ZeroMemoryDecouplesFragments) {
  Rng rng(12);
  ModelParams p = random_encoder(rng);
  p.at(sym::kMemory) = Tensor(p.at(sym::kMemory).shape());
  for (int trial = 0; trial < 50; ++trial) {
    FragmentPair a = oracle::random_pair(rng, 5, kDims.vocab);
    FragmentPair b = a;
    b.right = oracle::random_ids(rng, 5, kDims.vocab);
    Graph g(&p);
    EXPECT_EQ(stage2_left(g, a).value(), stage2_left(g, b).value());
  }
}

TEST(MemoryCouplingTest, RightTokensReachLeftStageTwo) {
  Rng rng(13);
  const ModelParams p = random_encoder(rng);
  const FragmentPair pair{{1, 2, 3}, {7, 8}};
  Graph g(&p);
  const auto grads = g.backward(sum(stage2_left(g, pair)));
  const Tensor& gw = grads.at(sym::kEmbed1);
  double mass = 0.0;
  for (std::size_t row = 0; row < kDims.embed; ++row) mass += std::abs(gw.at(row, 7));
  EXPECT_GT(mass, 1e-8);
}

TEST(BaselineTest, LeftOnlyWithEmptyLeftIsZero) {
  Rng rng(14);
  const ModelParams p = random_encoder(rng, EncoderKind::kLeftOnly);
  Graph g(&p);
  const Tensor u = encode_baseline(g, FragmentPair{{}, {1, 2}}, EncoderKind::kLeftOnly).value();
  for (double x : u.data()) EXPECT_EQ(x, 0.0);
}

TEST(BaselineTest, MatchesTwoLstmOracle) {
  Rng rng(15);
  for (EncoderKind kind : {EncoderKind::kLeftOnly, EncoderKind::kRightOnly, EncoderKind::kBiLstm}) {
    for (int trial = 0; trial < 100; ++trial) {
      const ModelParams p = random_encoder(rng, kind);
      const FragmentPair pair = oracle::random_pair(rng, 6, kDims.vocab);
      Graph g(&p);
      EXPECT_LT(oracle::max_diff(encode_baseline(g, pair, kind).value(),
                                 oracle::baseline(p, pair, kind)),
                1e-10)
          << to_string(kind);
    }
  }
}

TEST(BaselineTest, OneSidedIgnoresOtherFragment) {
  Rng rng(16);
  const ModelParams p = random_encoder(rng, EncoderKind::kLeftOnly);
  Graph g(&p);
  const Tensor a = encode_baseline(g, FragmentPair{{1, 2}, {3}}, EncoderKind::kLeftOnly).value();
  const Tensor b = encode_baseline(g, FragmentPair{{1, 2}, {9, 9}}, EncoderKind::kLeftOnly).value();
  EXPECT_EQ(a, b);
}

// With W_mu = 0 and the stage-2 columns of W_uq zeroed, the full encoder
// reduces to the bilstm baseline over the same stage-1 weights.
TEST(BaselineTest, BiLstmEqualsRestrictedFullEncoder) {
  Rng rng(17);
  ModelParams full = random_encoder(rng);
  full.at(sym::kMemory) = Tensor(full.at(sym::kMemory).shape());
  Tensor& w = full.at(sym::kCombine);
  ModelParams bi = full;
  Tensor narrow({kDims.output, 2 * kDims.hidden});
  for (std::size_t i = 0; i < kDims.output; ++i) {
    for (std::size_t j = 0; j < 4 * kDims.hidden; ++j) {
      if (j < 2 * kDims.hidden) {
        narrow.at(i, j) = w.at(i, j);
      } else {
        w.at(i, j) = 0.0;
      }
    }
  }
  bi.at(sym::kCombine) = narrow;
  for (int trial = 0; trial < 50; ++trial) {
    const FragmentPair pair = oracle::random_pair(rng, 6, kDims.vocab);
    Graph gf(&full);
    Graph gb(&bi);
    EXPECT_LT(oracle::max_diff(encode_source_sentence(gf, pair).value(),
                               oracle::to_vec(encode_baseline(gb, pair, EncoderKind::kBiLstm).value())),
              1e-12);
  }
}

TEST(EncoderKindTest, ParsesCliSpellings) {
  EXPECT_EQ(parse_encoder_kind("none"), EncoderKind::kFull);
  EXPECT_EQ(parse_encoder_kind("full"), EncoderKind::kFull);
  EXPECT_EQ(parse_encoder_kind("left"), EncoderKind::kLeftOnly);
  EXPECT_EQ(parse_encoder_kind("right"), EncoderKind::kRightOnly);
  EXPECT_EQ(parse_encoder_kind("bilstm"), EncoderKind::kBiLstm);
  EXPECT_THROW(parse_encoder_kind("middle"), ConfigError);
}

}  // namespace
}  // namespace vfib
