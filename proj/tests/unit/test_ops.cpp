// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "stride/ops.hpp"
#include "test_util.hpp"

namespace stride {
namespace {

using test::error_code_of;
using test::max_abs_diff;
using test::random_tensor;

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_EQ(error_code_of([] { TensorD({2, 3}, std::vector<double>(5)); }), ErrorCode::kShape);
  TensorD t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  t.at(1, 2, 3) = 7;
  EXPECT_EQ(t[23], 7);  // last axis fastest
  t.at(0, 1, 0) = 5;
  EXPECT_EQ(t[4], 5);
}

TEST(Conv2d, SinglePixelSeesOnlyCentreTap) {
  const TensorD x({1, 1, 1}, {2.5});
  const TensorD w({3, 3, 1, 1}, std::vector<double>(9, 1.0));
  const TensorD y = conv2d(x, w, TensorD({1}));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 2.5);
}

TEST(Conv2d, OnesImageSumsInRangeTaps) {
  const TensorD x({2, 2, 1}, 1.0);
  const TensorD w({3, 3, 1, 1}, 1.0);
  const TensorD y = conv2d(x, w, TensorD({1}));
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 4.0);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  Rng rng(1);
  const TensorD x = random_tensor({3, 5, 2}, rng);
  const TensorD y = conv2d(x, TensorD({3, 3, 2, 1}), TensorD({1}, {0.75}));
  EXPECT_EQ(y.shape(), (Shape{3, 5, 1}));
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 0.75);
}

TEST(Conv2d, RejectsChannelMismatchAndEvenKernel) {
  const TensorD x({2, 2, 3});
  EXPECT_EQ(error_code_of([&] { conv2d(x, TensorD({3, 3, 2, 1}), TensorD({1})); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { conv2d(x, TensorD({2, 2, 3, 1}), TensorD({1})); }), ErrorCode::kShape);
}

TEST(Conv2d, LinearInInput) {
  Rng rng(2);
  const TensorD x1 = random_tensor({4, 6, 3}, rng), x2 = random_tensor({4, 6, 3}, rng);
  const TensorD w = random_tensor({3, 3, 3, 2}, rng), b({2});
  const double a = 0.7, c = -1.3;
  TensorD mix = x1;
  mix *= a;
  TensorD x2c = x2;
  x2c *= c;
  mix += x2c;
  TensorD expect = conv2d(x1, w, b);
  expect *= a;
  TensorD y2 = conv2d(x2, w, b);
  y2 *= c;
  expect += y2;
  EXPECT_LE(max_abs_diff(conv2d(mix, w, b), expect), 1e-9);
}

TEST(MaxPoolH, Examples) {
  EXPECT_EQ(maxpool_h(TensorD({2, 1, 1}, {1, 3}))[0], 3);
  const TensorD y = maxpool_h(TensorD({4, 1, 1}, {1, 4, 2, 3}));
  EXPECT_EQ(y, TensorD({2, 1, 1}, {4, 3}));
}

TEST(MaxPoolH, TieRoutesGradientToFirst) {
  const TensorD x({2, 1, 1}, {5, 5});
  EXPECT_EQ(maxpool_h(x)[0], 5);
  const TensorD dx = maxpool_h_backward(x, TensorD({1, 1, 1}, {1.0}));
  EXPECT_EQ(dx, TensorD({2, 1, 1}, {1, 0}));
}

TEST(MaxPoolH, RejectsOddHeight) { EXPECT_EQ(error_code_of([] { maxpool_h(TensorD({3, 2, 1})); }), ErrorCode::kShape); }

TEST(AvgPoolW, Examples) {
  EXPECT_EQ(avgpool_w(TensorD({1, 2, 1}, {1, 3}))[0], 2);
  EXPECT_EQ(avgpool_w(TensorD({1, 2, 1}, {0.3, 0.3}))[0], 0.3);
  EXPECT_EQ(avgpool_w(TensorD({1, 4, 1}, {0, 1, 1, 0})), TensorD({1, 2, 1}, {0.5, 0.5}));
  EXPECT_EQ(error_code_of([] { avgpool_w(TensorD({1, 3, 1})); }), ErrorCode::kShape);
}

TEST(AvgPoolW, GradientIsHalfUpstream) {
  const TensorD dy({1, 2, 1}, {4, -2});
  EXPECT_EQ(avgpool_w_backward(dy), TensorD({1, 4, 1}, {2, 2, -1, -1}));
}

TEST(Pools, HalveOnlyTheirAxis) {
  const TensorD x({6, 10, 3});
  EXPECT_EQ(maxpool_h(x).shape(), (Shape{3, 10, 3}));
  EXPECT_EQ(avgpool_w(x).shape(), (Shape{6, 5, 3}));
}

TEST(Dense, Examples) {
  const TensorD x({2}, {1, 1});
  EXPECT_EQ(dense(x, TensorD({2, 1}, {2, 3}), TensorD({1}, {1}))[0], 6);
  const TensorD b({2}, {0.5, -1});
  EXPECT_EQ(dense(TensorD({2}), TensorD({2, 2}, {4, 1, 2, 3}), b), b);
  const TensorD xi({3}, {1, -2, 3});
  const TensorD eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(dense(xi, eye, TensorD({3})), xi);
  EXPECT_EQ(error_code_of([&] { dense(xi, TensorD({2, 3}), TensorD({3})); }), ErrorCode::kShape);
}

TEST(Dense, IdentityWeightPassesUpstream) {
  const TensorD eye({2, 2}, {1, 0, 0, 1});
  const TensorD dy({2}, {0.3, -0.7});
  EXPECT_EQ(dense_backward(TensorD({2}, {5, 6}), eye, dy).dx, dy);
}

TEST(Activation, Examples) {
  EXPECT_EQ(activate(0.0, Activation::kSigmoid), 0.5);
  EXPECT_EQ(activate(-2.0, Activation::kRelu), 0.0);
  EXPECT_EQ(activate(2.0, Activation::kRelu), 2.0);
  EXPECT_EQ(activate(0.0, Activation::kTanh), 0.0);
}

TEST(Activation, SigmoidSlopeAtZero) {
  const TensorD x({1}, {0.0});
  const TensorD dx = activation_backward(x, activation(x, Activation::kSigmoid), TensorD({1}, {2.0}), Activation::kSigmoid);
  EXPECT_DOUBLE_EQ(dx[0], 0.5);
}

TEST(Softmax, Examples) {
  const TensorD a = softmax_lastdim(TensorD({3}, {0, 0, 0}));
  for (double v : a.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const TensorD b = softmax_lastdim(TensorD({2}, {1000, 1000}));
  EXPECT_DOUBLE_EQ(b[0], 0.5);
  EXPECT_DOUBLE_EQ(b[1], 0.5);
  const TensorD c = softmax_lastdim(TensorD({2}, {0.0, std::log(3.0)}));
  EXPECT_NEAR(c[0], 0.25, 1e-15);
  EXPECT_NEAR(c[1], 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const TensorD x = random_tensor({4, 7}, rng, -30, 30);
    const TensorD y = softmax_lastdim(x);
    const Tensor yf = softmax_lastdim(x.cast<float>());
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0, sf = 0;
      for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_GT(y.at(r, k), 0.0);
        EXPECT_LE(y.at(r, k), 1.0);
        s += y.at(r, k);
        sf += yf.at(r, k);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
      EXPECT_NEAR(sf, 1.0, 1e-5);
    }
  }
}

TEST(Softmax, LogSoftmaxMatchesLogOfSoftmax) {
  Rng rng(4);
  const TensorD x = random_tensor({3, 5}, rng, -5, 5);
  const TensorD a = log_softmax_lastdim(x), b = softmax_lastdim(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], std::log(b[i]), 1e-12);
}

TEST(Concat, Examples) {
  EXPECT_EQ(concat_channels(TensorD({1, 1, 48}), TensorD({1, 1, 116})).shape(), (Shape{1, 1, 164}));
  const TensorD x({2, 2, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  EXPECT_EQ(concat_channels(x, TensorD({2, 2, 0})), x);
  EXPECT_EQ(concat_channels(TensorD({1, 1, 1}, {1}), TensorD({1, 1, 1}, {2})), TensorD({1, 1, 2}, {1, 2}));
  EXPECT_EQ(error_code_of([] { concat_channels(TensorD({2, 2, 1}), TensorD({2, 3, 1})); }), ErrorCode::kShape);
}

TEST(Concat, SliceRecoversInputsExactly) {
  Rng rng(5);
  const TensorD a = random_tensor({3, 4, 2}, rng), b = random_tensor({3, 4, 5}, rng);
  const TensorD c = concat_channels(a, b);
  EXPECT_EQ(slice_channels(c, 0, 2), a);
  EXPECT_EQ(slice_channels(c, 2, 5), b);
}

TEST(GradRules, GradientShapesMatchInputsAndAreLinearInUpstream) {
  Rng rng(6);
  const TensorD x = random_tensor({4, 6, 2}, rng), w = random_tensor({3, 3, 2, 3}, rng);
  const TensorD dy1 = random_tensor({4, 6, 3}, rng), dy2 = random_tensor({4, 6, 3}, rng);
  const auto g1 = conv2d_backward(x, w, dy1), g2 = conv2d_backward(x, w, dy2);
  TensorD sum = dy1;
  sum += dy2;
  const auto g = conv2d_backward(x, w, sum);
  EXPECT_EQ(g.dx.shape(), x.shape());
  EXPECT_EQ(g.dw.shape(), w.shape());
  EXPECT_EQ(g.db.shape(), (Shape{3}));
  TensorD expect = g1.dx;
  expect += g2.dx;
  EXPECT_LE(max_abs_diff(g.dx, expect), 1e-12);
  expect = g1.dw;
  expect += g2.dw;
  EXPECT_LE(max_abs_diff(g.dw, expect), 1e-12);
}

TEST(GradRules, RejectUpstreamShapeMismatch) {
  const TensorD x({4, 2, 1});
  EXPECT_EQ(error_code_of([&] { maxpool_h_backward(x, TensorD({4, 2, 1})); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { conv2d_backward(x, TensorD({1, 1, 1, 2}), TensorD({4, 2, 1})); }), ErrorCode::kShape);
  EXPECT_EQ(error_code_of([&] { activation_backward(x, x, TensorD({2}), Activation::kTanh); }), ErrorCode::kShape);
}

TEST(GlobalPools, ConstantsAndPermutation) {
  const TensorD x({2, 3, 2}, {1, 5, 1, 5, 1, 5, 1, 5, 1, 5, 1, 5});
  EXPECT_EQ(global_avg_pool(x), TensorD({2}, {1, 5}));
  EXPECT_EQ(global_max_pool(x), TensorD({2}, {1, 5}));
  const TensorD cm = channel_mean_max(TensorD({1, 1, 2}, {4, 2}));
  EXPECT_EQ(cm, TensorD({1, 1, 2}, {3, 4}));
}

}  // namespace
}  // namespace stride
