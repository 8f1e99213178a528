// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "stride/ctc.hpp"
#include "stride/datagen.hpp"
#include "stride/glyphs.hpp"
#include "stride/lstm.hpp"
#include "stride/model.hpp"
#include "stride/ops.hpp"
#include "stride/rng.hpp"

namespace {

using namespace stride;

Tensor random(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

// 3x3 convolution at the sizes of the second block of the reference model.
void BM_Conv2d(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0)), cout = static_cast<std::size_t>(state.range(1));
  const Tensor x = random({8, 32, cin}, 1), w = random({3, 3, cin, cout}, 2), b = random({cout}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b));
}
BENCHMARK(BM_Conv2d)->Args({32, 48})->Args({64, 116});

void BM_LstmForward(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  LstmParams<float> p = make_lstm_params<float>(165, 256, 128);
  p.w = random(p.w.shape(), 4);
  p.proj = random(p.proj.shape(), 5);
  const Tensor seq = random({steps, 165}, 6);
  for (auto _ : state) benchmark::DoNotOptimize(lstm_forward(seq, p, false));
}
BENCHMARK(BM_LstmForward)->Arg(32)->Arg(64);

void BM_CtcLoss(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  const Tensor lp = log_softmax_lastdim(random({steps, 237}, 7));
  const LabelSequence target{3, 14, 15, 9, 2, 6, 5, 3};
  for (auto _ : state) benchmark::DoNotOptimize(ctc_loss(lp, target));
}
BENCHMARK(BM_CtcLoss)->Arg(32)->Arg(128);

void BM_Forward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const ModelConfig config = latin_config();
  const auto p = init_params<float>(config, 8);
  Tensor img = random({16, width, 3}, 9);
  for (float& v : img.values()) v = 0.5f + 0.5f * v;
  for (auto _ : state) benchmark::DoNotOptimize(forward(img, p, config));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RenderWord(benchmark::State& state) {
  const GlyphAtlas glyphs = GlyphAtlas::builtin();
  AugmentSpec spec;
  spec.level = static_cast<double>(state.range(0)) / 10.0;
  Rng rng(10);
  for (auto _ : state) benchmark::DoNotOptimize(render_word(U"stride", Orientation::kHorizontal, glyphs, rng, spec));
}
BENCHMARK(BM_RenderWord)->Arg(0)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
