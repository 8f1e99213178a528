// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stride/charset.hpp"
#include "stride/lstm.hpp"
#include "stride/model.hpp"
#include "test_util.hpp"

namespace stride {
namespace {

using test::error_code_of;
using test::max_abs_diff;
using test::random_tensor;

ModelConfig tiny(AttentionVariant v = AttentionVariant::kCbam2) {
  ModelConfig c = toy_config(U"abc", v);
  c.c1 = 4;
  c.c2 = 8;
  c.c3 = 8;
  c.c4 = 8;
  c.lstm_hidden = 6;
  c.projection = 4;
  c.cbam_reduction = 4;
  c.gse_reduction = 4;
  return c;
}

std::size_t conv(std::size_t cin, std::size_t cout) { return 9 * cin * cout + cout; }
std::size_t mlp(std::size_t c, std::size_t h) { return c * h + h + h * c + c; }

// Hand count of every tensor for the four attention variants.
std::size_t expected_count(const ModelConfig& c) {
  std::size_t n = conv(3, c.c1) + conv(c.c1, c.c2) + conv(c.c2, c.c3) + conv(c.c3, c.c4);
  n += c.c2 + 1;
  const std::size_t in = c.c2 + c.c4 + 1, h = c.lstm_hidden, p = c.projection;
  n += 2 * ((in + p) * 4 * h + 4 * h + h * p);
  n += 2 * p * (c.charset.size() + 1) + c.charset.size() + 1;
  switch (c.attention) {
    case AttentionVariant::kNone:
      break;
    case AttentionVariant::kGse1:
      n += mlp(c.c4, c.c4 / c.gse_reduction);
      break;
    case AttentionVariant::kGse2:
      n += mlp(c.c2, c.c2 / c.gse_reduction) + mlp(c.c4, c.c4 / c.gse_reduction);
      break;
    case AttentionVariant::kCbam2:
      // SAM kernel is 3 on the 4-row map and 1 on the 1-row map.
      n += mlp(c.c2, std::max<std::size_t>(1, c.c2 / c.cbam_reduction)) + 9 * 2 + 1;
      n += mlp(c.c4, std::max<std::size_t>(1, c.c4 / c.cbam_reduction)) + 1 * 2 + 1;
      break;
  }
  return n;
}

TEST(ModelConfig, ToyCountMatchesHandArithmetic) {
  const ModelConfig c = toy_config(U"0123456789");
  EXPECT_EQ(param_count(c), 91300u);
  for (auto v : {AttentionVariant::kNone, AttentionVariant::kGse1, AttentionVariant::kGse2, AttentionVariant::kCbam2}) {
    EXPECT_EQ(param_count(toy_config(U"0123456789", v)), expected_count(toy_config(U"0123456789", v)));
    EXPECT_EQ(param_count(latin_config(v)), expected_count(latin_config(v)));
  }
}

TEST(ModelConfig, LatinAttentionDelta) {
  EXPECT_EQ(latin_config().charset.size(), 236u);
  EXPECT_EQ(param_count(latin_config(AttentionVariant::kCbam2)), 842048u);
  EXPECT_EQ(param_count(latin_config(AttentionVariant::kCbam2)) - param_count(latin_config(AttentionVariant::kNone)),
            4030u);
}

TEST(ModelConfig, ParseAttentionNames) {
  for (auto v : {AttentionVariant::kNone, AttentionVariant::kGse1, AttentionVariant::kGse2, AttentionVariant::kCbam2})
    EXPECT_EQ(parse_attention(to_string(v)), v);
  EXPECT_EQ(error_code_of([] { parse_attention("se3"); }), ErrorCode::kInvalidArgument);
}

TEST(Features, LatinShapesAtWidth64) {
  const ModelConfig c = latin_config();
  const auto p = init_params<float>(c, 1);
  Rng rng(1);
  const Tensor img = random_tensor<float>({16, 64, 3}, rng, 0, 1);
  EXPECT_EQ(extract_features(img, p, c).seq.shape(), (Shape{32, 164}));
  EXPECT_EQ(forward(img, p, c).logits.shape(), (Shape{32, 237}));
}

TEST(Features, StepsAreHalfTheWidth) {
  const ModelConfig c = tiny();
  const auto p = init_params<double>(c, 2);
  Rng rng(2);
  for (std::size_t w = 8; w <= 40; w += 2) {
    const auto f = extract_features(random_tensor({16, w, 3}, rng, 0, 1), p, c);
    EXPECT_EQ(f.seq.shape(), (Shape{w / 2, c.feature_channels()}));
    EXPECT_EQ(f.cb1.shape(), (Shape{4, w / 2, c.c2}));
  }
}

TEST(Features, RejectsBadInput) {
  const ModelConfig c = tiny();
  const auto p = make_params<double>(c);
  EXPECT_EQ(error_code_of([&] { extract_features(TensorD({16, 7, 3}), p, c); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { extract_features(TensorD({16, 6, 3}), p, c); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { extract_features(TensorD({15, 8, 3}), p, c); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { extract_features(TensorD({16, 8, 1}), p, c); }), ErrorCode::kShape);
}

TEST(Features, ZeroImageZeroParamsGivesZeros) {
  for (auto v : {AttentionVariant::kNone, AttentionVariant::kGse2, AttentionVariant::kCbam2}) {
    const ModelConfig c = tiny(v);
    const auto f = extract_features(TensorD({16, 16, 3}), make_params<double>(c), c);
    for (double x : f.seq.values()) EXPECT_EQ(x, 0.0);
  }
}

TEST(Orientation, ZeroDenseGivesHalf) {
  const ModelConfig c = tiny();
  auto p = init_params<double>(c, 3);
  p.orient_w.fill(0);
  p.orient_b.fill(0);
  Rng rng(3);
  EXPECT_EQ(forward(random_tensor({16, 20, 3}, rng, 0, 1), p, c).yp, 0.5);
}

TEST(Orientation, InvariantToWidthPermutation) {
  const ModelConfig c = tiny();
  const auto p = init_params<double>(c, 4);
  Rng rng(4);
  const TensorD cb1 = random_tensor({4, 6, c.c2}, rng);
  TensorD flipped(cb1.shape());
  for (std::size_t h = 0; h < 4; ++h)
    for (std::size_t w = 0; w < 6; ++w)
      for (std::size_t k = 0; k < c.c2; ++k) flipped.at(h, 5 - w, k) = cb1.at(h, w, k);
  EXPECT_NEAR(classify_orientation(cb1, p), classify_orientation(flipped, p), 1e-14);
}

TEST(Orientation, BinaryCrossEntropyExamples) {
  const std::vector<int> one{1};
  EXPECT_NEAR(orientation_loss(std::vector<double>{1.0}, one), 0.0, 1e-6);
  EXPECT_NEAR(orientation_loss(std::vector<double>{0.5}, one), std::log(2.0), 1e-12);
  EXPECT_NEAR(orientation_loss(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 0.1054, 1e-4);
  EXPECT_TRUE(std::isfinite(orientation_loss(std::vector<double>{0.0}, one)));
}

TEST(Lstm, ZeroParamsGiveZeros) {
  const auto p = make_lstm_params<double>(5, 4, 3);
  Rng rng(5);
  const TensorD seq = random_tensor({7, 5}, rng);
  for (bool rev : {false, true}) {
    const TensorD y = lstm_forward(seq, p, rev);
    EXPECT_EQ(y.shape(), (Shape{7, 3}));
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Lstm, ReverseIsForwardOnReversedSequence) {
  auto p = make_lstm_params<double>(5, 4, 3);
  Rng rng(6);
  for (auto* t : {&p.w, &p.b, &p.proj})
    for (auto& v : t->values()) v = rng.uniform(-0.8, 0.8);
  const TensorD seq = random_tensor({9, 5}, rng);
  TensorD rseq(seq.shape());
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t k = 0; k < 5; ++k) rseq.at(8 - t, k) = seq.at(t, k);
  const TensorD back = lstm_forward(seq, p, true), fwd = lstm_forward(rseq, p, false);
  for (std::size_t t = 0; t < 9; ++t)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back.at(t, k), fwd.at(8 - t, k), 1e-14);
}

TEST(Lstm, FirstStepMatchesCellEquations) {
  auto p = make_lstm_params<double>(2, 1, 1);
  Rng rng(7);
  for (auto* t : {&p.w, &p.b, &p.proj})
    for (auto& v : t->values()) v = rng.uniform(-1, 1);
  const TensorD seq({1, 2}, {0.3, -0.6});
  auto gate = [&](std::size_t g) { return p.w.at(0, g) * 0.3 + p.w.at(1, g) * -0.6 + p.b[g]; };
  const double i = 1 / (1 + std::exp(-gate(0))), gg = std::tanh(gate(2)), o = 1 / (1 + std::exp(-gate(3)));
  const double expect = o * std::tanh(i * gg) * p.proj[0];
  EXPECT_NEAR(lstm_forward(seq, p, false)[0], expect, 1e-14);
}

TEST(Bilstm, ZeroParamsGiveZeros) {
  const ModelConfig c = tiny();
  const auto p = make_params<double>(c);
  Rng rng(8);
  const TensorD h = bilstm_projection(random_tensor({5, c.feature_channels()}, rng), 0.7, p);
  EXPECT_EQ(h.shape(), (Shape{5, 2 * c.projection}));
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(Bilstm, OrientationInputIsLive) {
  const ModelConfig c = tiny();
  const auto p = init_params<double>(c, 9);
  Rng rng(9);
  const TensorD seq = random_tensor({5, c.feature_channels()}, rng);
  EXPECT_GT(max_abs_diff(bilstm_projection(seq, 0.0, p), bilstm_projection(seq, 1.0, p)), 1e-6);
}

TEST(Prediction, ZeroWeightsGiveBias) {
  const ModelConfig c = tiny();
  auto p = make_params<double>(c);
  p.pred_b = TensorD({4}, {0.5, -1, 2, 0.25});
  Rng rng(10);
  const TensorD y = predict_frames(random_tensor({6, 2 * c.projection}, rng), p);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(y.at(t, k), p.pred_b[k]);
}

TEST(Forward, ZeroParamsAreUniform) {
  const ModelConfig c = tiny();
  Rng rng(11);
  const auto out = forward(random_tensor({16, 12, 3}, rng, 0, 1), make_params<double>(c), c);
  EXPECT_EQ(out.yp, 0.5);
  const TensorD probs = softmax_lastdim(out.logits);
  for (double v : probs.values()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Forward, DeterministicAndFinite) {
  const ModelConfig c = toy_config(U"0123456789");
  const auto p = init_params<float>(c, 12);
  Rng rng(12);
  const Tensor img = random_tensor<float>({16, 40, 3}, rng, 0, 1);
  const auto a = forward(img, p, c), b = forward(img, p, c);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.yp, b.yp);
  for (float v : a.logits.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_TRUE(a.yp > 0 && a.yp < 1);
}

TEST(Forward, InitIsSeeded) {
  const ModelConfig c = tiny();
  const auto a = init_params<double>(c, 1), b = init_params<double>(c, 1), d = init_params<double>(c, 2);
  EXPECT_EQ(a.conv3_w, b.conv3_w);
  EXPECT_NE(a.conv3_w, d.conv3_w);
  EXPECT_EQ(a.lstm_fw.b[c.lstm_hidden], 1.0);  // forget bias
}

TEST(SampleLoss, CombinesCtcAndBce) {
  const ModelConfig c = tiny();
  const auto p = init_params<double>(c, 13);
  Rng rng(13);
  const TensorD img = random_tensor({16, 12, 3}, rng, 0, 1);
  const auto l0 = sample_loss(p, c, img, {0, 2}, 1, 0.0);
  const auto l1 = sample_loss(p, c, img, {0, 2}, 1, 1.0);
  EXPECT_DOUBLE_EQ(l0.total, l0.ctc);
  EXPECT_NEAR(l1.total, l1.ctc + l1.orient, 1e-12);
  EXPECT_NEAR(l1.orient, -std::log(l1.yp), 1e-12);
}

}  // namespace
}  // namespace stride
