// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "stride/attention.hpp"
#include "stride/ctc.hpp"
#include "stride/errors.hpp"
#include "stride/lstm.hpp"
#include "stride/model.hpp"
#include "stride/ops.hpp"
#include "stride/rng.hpp"

namespace stride {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inputs closer than this to a ReLU hinge or a max tie are redrawn.
constexpr double kKinkMargin = 1e-3;
constexpr std::size_t kMaxAttempts = 20000;

TensorD random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(s);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double relu_margin(const TensorD& pre) {
  double m = kInf;
  for (double v : pre.values()) m = std::min(m, std::abs(v));
  return m;
}

// Smallest gap inside the row pairs reduced by maxpool_h; pairs of exact
// zeros (two dead ReLUs) stay tied under small perturbations and are ignored.
double pair_margin(const TensorD& a) {
  double m = kInf;
  const std::size_t H = a.dim(0), W = a.dim(1), C = a.dim(2);
  for (std::size_t i = 0; i + 1 < H; i += 2)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        const double u = a.at(i, x, c), v = a.at(i + 1, x, c);
        if (u == 0.0 && v == 0.0) continue;
        m = std::min(m, std::abs(u - v));
      }
  return m;
}

double top2_gap(std::vector<double>& v) {
  if (v.size() < 2) return kInf;
  std::partial_sort(v.begin(), v.begin() + 2, v.end(), std::greater<>());
  return v[0] - v[1];
}

double spatial_max_gap(const TensorD& x) {
  double m = kInf;
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> v(HW);
    for (std::size_t i = 0; i < HW; ++i) v[i] = x[i * C + c];
    m = std::min(m, top2_gap(v));
  }
  return m;
}

double channel_max_gap(const TensorD& x) {
  double m = kInf;
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  for (std::size_t i = 0; i < HW; ++i) {
    std::vector<double> v(x.data() + i * C, x.data() + (i + 1) * C);
    m = std::min(m, top2_gap(v));
  }
  return m;
}

double cbam_margin(const TensorD& x, const CbamTrace<double>& tr) {
  return std::min({relu_margin(tr.cam.avg.pre), relu_margin(tr.cam.max.pre), spatial_max_gap(x),
                   channel_max_gap(tr.cam_out)});
}

struct Suite {
  const GradCheckOptions& opt;
  GradCheckReport& report;

  void add(std::string name, double tol, std::size_t attempts, const std::vector<TensorD*>& inputs,
           const std::vector<const TensorD*>& analytic, const std::function<double()>& objective,
           bool per_tensor = false) {
    GradCheckResult r;
    r.name = std::move(name);
    r.tolerance = tol;
    r.attempts = attempts;
    r.per_tensor = per_tensor;
    const GradientErrors e = gradient_errors(inputs, analytic, objective, opt.step);
    r.components = e.components;
    r.max_component_error = e.component;
    r.max_rel_error = per_tensor ? e.tensor : e.component;
    report.results.push_back(std::move(r));
  }

  void unattainable(std::string name, double tol) {
    GradCheckResult r;
    r.name = std::move(name);
    r.tolerance = tol;
    r.attempts = kMaxAttempts;
    r.max_rel_error = kInf;
    report.results.push_back(std::move(r));
  }
};

void check_primitives(Suite& s, Rng& rng) {
  const double tol = s.opt.op_tolerance;

  for (std::size_t k : {1, 3}) {
    TensorD x = random_tensor({4, 5, 2}, rng), w = random_tensor({k, k, 2, 3}, rng), b = random_tensor({3}, rng);
    const TensorD r = random_tensor({4, 5, 3}, rng);
    const auto g = conv2d_backward(x, w, r);
    s.add("conv2d k=" + std::to_string(k), tol, 1, {&x, &w, &b}, {&g.dx, &g.dw, &g.db},
          [&] { return dot(r, conv2d(x, w, b)); });
  }

  {
    TensorD x;
    std::size_t attempts = 0;
    do {
      x = random_tensor({4, 3, 2}, rng);
      ++attempts;
    } while (pair_margin(x) < kKinkMargin);
    const TensorD r = random_tensor({2, 3, 2}, rng);
    const TensorD dx = maxpool_h_backward(x, r);
    s.add("maxpool_h", tol, attempts, {&x}, {&dx}, [&] { return dot(r, maxpool_h(x)); });
  }
  {
    TensorD x = random_tensor({2, 6, 3}, rng);
    const TensorD r = random_tensor({2, 3, 3}, rng);
    const TensorD dx = avgpool_w_backward(r);
    s.add("avgpool_w", tol, 1, {&x}, {&dx}, [&] { return dot(r, avgpool_w(x)); });
  }
  {
    TensorD x = random_tensor({3, 4}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
    const TensorD r = random_tensor({3, 5}, rng);
    const auto g = dense_backward(x, w, r);
    s.add("dense", tol, 1, {&x, &w, &b}, {&g.dx, &g.dw, &g.db}, [&] { return dot(r, dense(x, w, b)); });
  }
  for (auto [kind, name] : {std::pair{Activation::kSigmoid, "sigmoid"}, std::pair{Activation::kTanh, "tanh"},
                            std::pair{Activation::kRelu, "relu"}}) {
    TensorD x;
    std::size_t attempts = 0;
    do {
      x = random_tensor({3, 4, 2}, rng, -2.0, 2.0);
      ++attempts;
    } while (kind == Activation::kRelu && relu_margin(x) < kKinkMargin);
    const TensorD r = random_tensor({3, 4, 2}, rng);
    const TensorD dx = activation_backward(x, activation(x, kind), r, kind);
    s.add(name, tol, attempts, {&x}, {&dx}, [&, kind = kind] { return dot(r, activation(x, kind)); });
  }
  {
    TensorD x = random_tensor({3, 5}, rng, -2.0, 2.0);
    const TensorD r = random_tensor({3, 5}, rng);
    const TensorD dx = softmax_lastdim_backward(softmax_lastdim(x), r);
    s.add("softmax", tol, 1, {&x}, {&dx}, [&] { return dot(r, softmax_lastdim(x)); });
    const TensorD dl = log_softmax_lastdim_backward(log_softmax_lastdim(x), r);
    s.add("log_softmax", tol, 1, {&x}, {&dl}, [&] { return dot(r, log_softmax_lastdim(x)); });
  }
  {
    TensorD a = random_tensor({2, 3, 2}, rng), b = random_tensor({2, 3, 3}, rng);
    const TensorD r = random_tensor({2, 3, 5}, rng);
    const TensorD da = slice_channels(r, 0, 2), db = slice_channels(r, 2, 3);
    s.add("concat_channels", tol, 1, {&a, &b}, {&da, &db}, [&] { return dot(r, concat_channels(a, b)); });
  }
  {
    TensorD x = random_tensor({2, 3, 5}, rng);
    const TensorD r = random_tensor({2, 3, 2}, rng);
    const TensorD dx = concat_channels(concat_channels(TensorD({2, 3, 1}), r), TensorD({2, 3, 2}));
    s.add("slice_channels", tol, 1, {&x}, {&dx}, [&] { return dot(r, slice_channels(x, 1, 2)); });
  }
  {
    TensorD x = random_tensor({3, 4, 3}, rng);
    const TensorD r = random_tensor({3}, rng);
    const TensorD dx = global_avg_pool_backward(x.shape(), r);
    s.add("global_avg_pool", tol, 1, {&x}, {&dx}, [&] { return dot(r, global_avg_pool(x)); });
  }
  {
    TensorD x;
    std::size_t attempts = 0;
    do {
      x = random_tensor({3, 4, 3}, rng);
      ++attempts;
    } while (spatial_max_gap(x) < kKinkMargin);
    const TensorD r = random_tensor({3}, rng);
    const TensorD dx = global_max_pool_backward(x, r);
    s.add("global_max_pool", tol, attempts, {&x}, {&dx}, [&] { return dot(r, global_max_pool(x)); });
  }
  {
    TensorD x;
    std::size_t attempts = 0;
    do {
      x = random_tensor({3, 4, 3}, rng);
      ++attempts;
    } while (channel_max_gap(x) < kKinkMargin);
    const TensorD r = random_tensor({3, 4, 2}, rng);
    const TensorD dx = channel_mean_max_backward(x, r);
    s.add("channel_mean_max", tol, attempts, {&x}, {&dx}, [&] { return dot(r, channel_mean_max(x)); });
  }
  {
    TensorD x = random_tensor({3, 4, 3}, rng), g = random_tensor({3}, rng);
    const TensorD r = random_tensor({3, 4, 3}, rng);
    const auto [dx, dg] = scale_channels_backward(x, g, r);
    s.add("scale_channels", tol, 1, {&x, &g}, {&dx, &dg}, [&] { return dot(r, scale_channels(x, g)); });
  }
  {
    TensorD x = random_tensor({3, 4, 3}, rng), g = random_tensor({3, 4, 1}, rng);
    const TensorD r = random_tensor({3, 4, 3}, rng);
    const auto [dx, dg] = scale_spatial_backward(x, g, r);
    s.add("scale_spatial", tol, 1, {&x, &g}, {&dx, &dg}, [&] { return dot(r, scale_spatial(x, g)); });
  }
  for (bool reverse : {false, true}) {
    TensorD x = random_tensor({5, 3}, rng);
    LstmParams<double> p{random_tensor({3 + 2, 4 * 4}, rng, -0.5, 0.5), random_tensor({4 * 4}, rng, -0.5, 0.5),
                         random_tensor({4, 2}, rng, -0.5, 0.5)};
    const TensorD r = random_tensor({5, 2}, rng);
    LstmTrace<double> tr;
    lstm_forward(x, p, reverse, &tr);
    const auto g = lstm_backward(p, tr, r);
    s.add(reverse ? "lstm reverse" : "lstm forward", tol, 1, {&x, &p.w, &p.b, &p.proj},
          {&g.dx, &g.dp.w, &g.dp.b, &g.dp.proj}, [&] { return dot(r, lstm_forward(x, p, reverse)); });
  }
}

void check_blocks(Suite& s, Rng& rng) {
  const double tol = s.opt.op_tolerance;
  const Shape xs{4, 5, 8};

  {
    TensorD x;
    GseParams<double> p;
    GseTrace<double> tr;
    std::size_t attempts = 0;
    do {
      x = random_tensor(xs, rng);
      p = {random_tensor({8, 2}, rng), random_tensor({2}, rng), random_tensor({2, 8}, rng), random_tensor({8}, rng)};
      gse_block(x, p, &tr);
      ++attempts;
    } while (relu_margin(tr.mlp.pre) < kKinkMargin && attempts < kMaxAttempts);
    const TensorD r = random_tensor(xs, rng);
    const auto g = gse_block_backward(x, p, tr, r);
    s.add("gse", tol, attempts, {&x, &p.w1, &p.b1, &p.w2, &p.b2}, {&g.dx, &g.dp.w1, &g.dp.b1, &g.dp.w2, &g.dp.b2},
          [&] { return dot(r, gse_block(x, p)); });
  }

  auto draw_cbam = [&](TensorD& x, CbamParams<double>& p, CbamTrace<double>& tr) {
    std::size_t attempts = 0;
    do {
      x = random_tensor(xs, rng);
      p = {random_tensor({8, 2}, rng), random_tensor({2}, rng), random_tensor({2, 8}, rng),
           random_tensor({8}, rng),    random_tensor({3, 3, 2, 1}, rng), random_tensor({1}, rng)};
      cbam(x, p, &tr);
      ++attempts;
    } while (cbam_margin(x, tr) < kKinkMargin && attempts < kMaxAttempts);
    return attempts;
  };

  {
    TensorD x;
    CbamParams<double> p;
    CbamTrace<double> tr;
    const std::size_t attempts = draw_cbam(x, p, tr);
    const TensorD r = random_tensor(xs, rng);
    CbamParams<double> dp{TensorD(p.w1.shape()), TensorD(p.b1.shape()),    TensorD(p.w2.shape()),
                          TensorD(p.b2.shape()), TensorD(p.sam_w.shape()), TensorD(p.sam_b.shape())};
    const TensorD dx = cam_backward(x, p, tr.cam, r, dp);
    s.add("cam", tol, attempts, {&x, &p.w1, &p.b1, &p.w2, &p.b2}, {&dx, &dp.w1, &dp.b1, &dp.w2, &dp.b2},
          [&] { return dot(r, cam(x, p)); });

    SamTrace<double> st;
    sam(x, p, &st);
    CbamParams<double> dq = dp;
    dq.sam_w.fill(0.0);
    dq.sam_b.fill(0.0);
    const TensorD dxs = sam_backward(x, p, st, r, dq);
    s.add("sam", tol, attempts, {&x, &p.sam_w, &p.sam_b}, {&dxs, &dq.sam_w, &dq.sam_b},
          [&] { return dot(r, sam(x, p)); });
  }
  {
    TensorD x;
    CbamParams<double> p;
    CbamTrace<double> tr;
    const std::size_t attempts = draw_cbam(x, p, tr);
    const TensorD r = random_tensor(xs, rng);
    const auto g = cbam_backward(x, p, tr, r);
    s.add("cbam", tol, attempts, {&x, &p.w1, &p.b1, &p.w2, &p.b2, &p.sam_w, &p.sam_b},
          {&g.dx, &g.dp.w1, &g.dp.b1, &g.dp.w2, &g.dp.b2, &g.dp.sam_w, &g.dp.sam_b},
          [&] { return dot(r, cbam(x, p)); });
  }
}

void check_ctc(Suite& s, Rng& rng) {
  const std::vector<LabelSequence> targets{{0}, {1, 2}, {0, 0}, {2, 1, 0}, {1, 1, 2}};
  for (const auto& target : targets) {
    TensorD lp = log_softmax_lastdim(random_tensor({5, 4}, rng, -2.0, 2.0));
    const auto res = ctc_loss(lp, target, true);
    std::string name = "ctc target=";
    for (int c : target) name += std::to_string(c);
    s.add(name, s.opt.op_tolerance, 1, {&lp}, {&res.grad}, [&] { return ctc_loss(lp, target, false).loss; });
  }
}

double model_margin(const ModelConfig& config, const ForwardTrace<double>& tr) {
  const auto& f = tr.feat;
  double m = std::min({relu_margin(f.z1), relu_margin(f.z2), relu_margin(f.z3), relu_margin(f.z4), pair_margin(f.a1),
                       pair_margin(f.a2), pair_margin(f.a3), pair_margin(f.a4), pair_margin(f.cb1),
                       pair_margin(f.s1)});
  for (const auto* at : {&f.att1, &f.att2}) {
    if (at->in.size() == 0) continue;
    if (config.attention == AttentionVariant::kCbam2)
      m = std::min(m, cbam_margin(at->in, at->cbam));
    else if (at->gse.mlp.pre.size() > 0)
      m = std::min(m, relu_margin(at->gse.mlp.pre));
  }
  return m;
}

void check_model(Suite& s, std::uint64_t seed) {
  for (AttentionVariant variant :
       {AttentionVariant::kNone, AttentionVariant::kGse1, AttentionVariant::kGse2, AttentionVariant::kCbam2}) {
    ModelConfig config;
    config.charset = U"abc";
    config.c1 = 4;
    config.c2 = 8;
    config.c3 = 8;
    config.c4 = 8;
    config.lstm_hidden = 6;
    config.projection = 4;
    config.cbam_reduction = 4;
    config.gse_reduction = 4;
    config.attention = variant;
    const std::string name = "model " + std::string(to_string(variant));
    const LabelSequence target{0, 2};
    const int orientation = 1;
    const double lambda = 1.0;

    Rng rng(seed ^ 0x6d6f64656cULL ^ static_cast<std::uint64_t>(variant));
    TensorD img;
    ModelParams<double> p;
    std::size_t attempts = 0;
    bool found = false;
    while (attempts < kMaxAttempts && !found) {
      ++attempts;
      img = random_tensor({16, 8, 3}, rng, 0.0, 1.0);
      p = init_params<double>(config, rng.next());
      // Nonzero biases so their gradients are exercised away from the init point.
      p.for_each([&](std::string_view, TensorD& t) {
        for (auto& v : t.values()) v += rng.uniform(-0.1, 0.1);
      });
      ForwardTrace<double> tr;
      forward(img, p, config, &tr);
      found = model_margin(config, tr) >= kKinkMargin;
    }
    if (!found) {
      s.unattainable(name, s.opt.model_tolerance);
      continue;
    }

    // Finite differences hold the BiLSTM's orientation input at its base value,
    // matching the constant the backward pass assumes.
    const double held = forward(img, p, config).yp;
    ModelParams<double> g = make_params<double>(config);
    sample_loss(p, config, img, target, orientation, lambda, &g);
    std::vector<TensorD*> inputs;
    std::vector<const TensorD*> analytic;
    p.for_each([&](std::string_view, TensorD& t) { inputs.push_back(&t); });
    g.for_each([&](std::string_view, const TensorD& t) { analytic.push_back(&t); });
    s.add(name, s.opt.model_tolerance, attempts, inputs, analytic,
          [&] {
            return sample_loss<double>(p, config, img, target, orientation, lambda, nullptr, 1.0, held)
                .total;
          },
          true);
  }
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

bool GradCheckReport::passed() const {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed(); });
}

GradientErrors gradient_errors(const std::vector<TensorD*>& inputs, const std::vector<const TensorD*>& analytic,
                               const std::function<double()>& objective, double step) {
  check(inputs.size() == analytic.size(), ErrorCode::kInvalidArgument, "gradcheck: input/gradient count mismatch");
  GradientErrors out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    TensorD& x = *inputs[i];
    const TensorD& a = *analytic[i];
    check(x.shape() == a.shape(), ErrorCode::kShape,
          "gradcheck: gradient shape " + shape_str(a.shape()) + " vs input " + shape_str(x.shape()));
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double orig = x[k];
      x[k] = orig + step;
      const double up = objective();
      x[k] = orig - step;
      const double down = objective();
      x[k] = orig;
      const double numeric = (up - down) / (2 * step);
      const double err = relative_error(a[k], numeric);
      out.component = std::isnan(err) ? kInf : std::max(out.component, err);
      diff2 += (a[k] - numeric) * (a[k] - numeric);
      a2 += a[k] * a[k];
      n2 += numeric * numeric;
      ++out.components;
    }
    const double terr = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
    out.tensor = std::isnan(terr) ? kInf : std::max(out.tensor, terr);
  }
  return out;
}

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report;
  Suite suite{options, report};
  Rng rng(options.seed);
  if (options.primitives) check_primitives(suite, rng);
  if (options.blocks) check_blocks(suite, rng);
  if (options.ctc) check_ctc(suite, rng);
  if (options.model) check_model(suite, options.seed);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace stride
