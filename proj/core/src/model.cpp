// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/model.hpp"

#include <algorithm>
#include <cmath>

#include "stride/charset.hpp"
#include "stride/rng.hpp"

namespace stride {

std::string_view to_string(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::kNone:
      return "none";
    case AttentionVariant::kGse1:
      return "gse1";
    case AttentionVariant::kGse2:
      return "gse2";
    case AttentionVariant::kCbam2:
      return "cbam2";
  }
  return "?";
}

AttentionVariant parse_attention(std::string_view name) {
  for (auto v : {AttentionVariant::kNone, AttentionVariant::kGse1, AttentionVariant::kGse2, AttentionVariant::kCbam2})
    if (to_string(v) == name) return v;
  fail(ErrorCode::kInvalidArgument, "unknown attention variant '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  check(!charset.empty(), ErrorCode::kEmptyCharset, "model charset is empty");
  check(input_height == 16, ErrorCode::kInvalidArgument, "input height must be 16");
  check(c1 && c2 && c3 && c4 && lstm_hidden && projection, ErrorCode::kInvalidArgument, "sizes must be positive");
  check(cbam_reduction >= 1 && gse_reduction >= 1, ErrorCode::kInvalidArgument, "reductions must be positive");
  check(sam_kernel % 2 == 1, ErrorCode::kInvalidArgument, "SAM kernel must be odd");
  if (attention == AttentionVariant::kGse1 || attention == AttentionVariant::kGse2) {
    check(c4 % gse_reduction == 0, ErrorCode::kInvalidArgument, "GSE reduction must divide c4");
  }
  if (attention == AttentionVariant::kGse2) {
    check(c2 % gse_reduction == 0, ErrorCode::kInvalidArgument, "GSE reduction must divide c2");
  }
  for (std::size_t i = 0; i < charset.size(); ++i)
    check(charset.find(charset[i], i + 1) == std::u32string::npos, ErrorCode::kInvalidArgument,
          "charset has a duplicate character");
}

ModelConfig latin_config(AttentionVariant attention) {
  ModelConfig c;
  c.charset = latin_charset();
  c.attention = attention;
  return c;
}

ModelConfig toy_config(std::u32string charset, AttentionVariant attention) {
  ModelConfig c;
  c.charset = std::move(charset);
  c.c1 = 16;
  c.c2 = 24;
  c.c3 = 32;
  c.c4 = 56;
  c.lstm_hidden = 64;
  c.projection = 32;
  c.attention = attention;
  return c;
}

namespace {

// Spatial heights at the two attention positions for a 16-high input.
constexpr std::size_t kBlock1Height = 4;
constexpr std::size_t kBlock2Height = 1;

template <typename T>
AttentionParams<T> make_attention(const ModelConfig& c, std::size_t channels, std::size_t height, bool gse) {
  if (gse) return make_gse_params<T>(channels, c.gse_reduction);
  return make_cbam_params<T>(channels, c.cbam_reduction, sam_kernel_for(height, height, c.sam_kernel));
}

template <typename T>
void fill_uniform(BasicTensor<T>& t, Rng& rng, double bound) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
ModelParams<T> make_params(const ModelConfig& c) {
  c.validate();
  ModelParams<T> p;
  p.conv1_w = BasicTensor<T>({3, 3, 3, c.c1});
  p.conv1_b = BasicTensor<T>({c.c1});
  p.conv2_w = BasicTensor<T>({3, 3, c.c1, c.c2});
  p.conv2_b = BasicTensor<T>({c.c2});
  p.conv3_w = BasicTensor<T>({3, 3, c.c2, c.c3});
  p.conv3_b = BasicTensor<T>({c.c3});
  p.conv4_w = BasicTensor<T>({3, 3, c.c3, c.c4});
  p.conv4_b = BasicTensor<T>({c.c4});
  switch (c.attention) {
    case AttentionVariant::kNone:
      break;
    case AttentionVariant::kGse1:
      p.att2 = make_attention<T>(c, c.c4, kBlock2Height, true);
      break;
    case AttentionVariant::kGse2:
      p.att1 = make_attention<T>(c, c.c2, kBlock1Height, true);
      p.att2 = make_attention<T>(c, c.c4, kBlock2Height, true);
      break;
    case AttentionVariant::kCbam2:
      p.att1 = make_attention<T>(c, c.c2, kBlock1Height, false);
      p.att2 = make_attention<T>(c, c.c4, kBlock2Height, false);
      break;
  }
  p.orient_w = BasicTensor<T>({c.c2, 1});
  p.orient_b = BasicTensor<T>({1});
  p.lstm_fw = make_lstm_params<T>(c.lstm_input(), c.lstm_hidden, c.projection);
  p.lstm_bw = make_lstm_params<T>(c.lstm_input(), c.lstm_hidden, c.projection);
  p.pred_w = BasicTensor<T>({2 * c.projection, c.num_classes()});
  p.pred_b = BasicTensor<T>({c.num_classes()});
  return p;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& c, std::uint64_t seed) {
  auto p = make_params<T>(c);
  Rng rng(seed);
  p.for_each([&](std::string_view name, BasicTensor<T>& t) {
    const bool is_bias = name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2");
    if (is_bias) return;
    std::size_t fan_in = 1, fan_out = t.shape().back();
    for (std::size_t i = 0; i + 1 < t.rank(); ++i) fan_in *= t.dim(i);
    if (name.starts_with("conv")) {
      fill_uniform(t, rng, std::sqrt(6.0 / static_cast<double>(fan_in)));  // He, ReLU follows
    } else if (name.starts_with("lstm")) {
      fill_uniform(t, rng, 1.0 / std::sqrt(static_cast<double>(c.lstm_hidden)));
    } else {
      fill_uniform(t, rng, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
    }
  });
  for (auto* lstm : {&p.lstm_fw, &p.lstm_bw})
    for (std::size_t j = 0; j < c.lstm_hidden; ++j) lstm->b[c.lstm_hidden + j] = T(1);
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p, const ModelConfig& config) {
  auto out = make_params<To>(config);
  std::vector<const BasicTensor<From>*> src;
  p.for_each([&](std::string_view, const BasicTensor<From>& t) { src.push_back(&t); });
  std::size_t i = 0;
  out.for_each([&](std::string_view, BasicTensor<To>& t) { t = src.at(i++)->template cast<To>(); });
  return out;
}

std::size_t param_count(const ModelConfig& config) { return make_params<float>(config).count(); }

namespace {

template <typename T>
BasicTensor<T> apply_attention(const AttentionParams<T>& att, const BasicTensor<T>& x, AttentionTrace<T>* tr) {
  if (auto* g = std::get_if<GseParams<T>>(&att)) {
    if (tr) tr->in = x;
    return gse_block(x, *g, tr ? &tr->gse : nullptr);
  }
  if (auto* c = std::get_if<CbamParams<T>>(&att)) {
    if (tr) tr->in = x;
    return cbam(x, *c, tr ? &tr->cbam : nullptr);
  }
  return x;
}

// Accumulates parameter grads into `dp` and returns dx.
template <typename T>
BasicTensor<T> attention_backward(const AttentionParams<T>& att, const AttentionTrace<T>& tr, const BasicTensor<T>& dy,
                                  AttentionParams<T>& dp) {
  if (auto* g = std::get_if<GseParams<T>>(&att)) {
    auto grads = gse_block_backward(tr.in, *g, tr.gse, dy);
    dp = std::move(grads.dp);
    return std::move(grads.dx);
  }
  if (auto* c = std::get_if<CbamParams<T>>(&att)) {
    auto grads = cbam_backward(tr.in, *c, tr.cbam, dy);
    dp = std::move(grads.dp);
    return std::move(grads.dx);
  }
  return dy;
}

// Pre-activation conv, ReLU, height max-pool.
template <typename T>
BasicTensor<T> conv_block(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b, BasicTensor<T>& z,
                          BasicTensor<T>& a) {
  z = conv2d(x, w, b);
  a = activation(z, Activation::kRelu);
  return maxpool_h(a);
}

template <typename T>
BasicTensor<T> conv_block_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& z,
                                   const BasicTensor<T>& a, const BasicTensor<T>& dp, BasicTensor<T>& dw,
                                   BasicTensor<T>& db) {
  auto da = maxpool_h_backward(a, dp);
  auto dz = activation_backward(z, a, da, Activation::kRelu);
  auto g = conv2d_backward(x, w, dz);
  dw += g.dw;
  db += g.db;
  return std::move(g.dx);
}

}  // namespace

template <typename T>
Features<T> extract_features(const BasicTensor<T>& img, const ModelParams<T>& p, const ModelConfig& config,
                             FeatureTrace<T>* trace) {
  check(img.rank() == 3 && img.dim(0) == config.input_height && img.dim(2) == 3, ErrorCode::kShape,
        "input image must be 16 x W x 3, got " + shape_str(img.shape()));
  const std::size_t W = img.dim(1);
  check(W % 2 == 0 && W >= 8, ErrorCode::kShape, "input width must be even and >= 8, got " + std::to_string(W));

  FeatureTrace<T> local;
  FeatureTrace<T>& tr = trace ? *trace : local;
  tr.x = img;
  tr.p1 = conv_block(img, p.conv1_w, p.conv1_b, tr.z1, tr.a1);
  tr.p2 = conv_block(tr.p1, p.conv2_w, p.conv2_b, tr.z2, tr.a2);
  tr.q2 = avgpool_w(tr.p2);
  tr.cb1 = apply_attention(p.att1, tr.q2, &tr.att1);
  tr.p3 = conv_block(tr.cb1, p.conv3_w, p.conv3_b, tr.z3, tr.a3);
  tr.p4 = conv_block(tr.p3, p.conv4_w, p.conv4_b, tr.z4, tr.a4);
  tr.top = apply_attention(p.att2, tr.p4, &tr.att2);
  tr.s1 = maxpool_h(tr.cb1);
  tr.s2 = maxpool_h(tr.s1);
  auto cat = concat_channels(tr.s2, tr.top);
  const std::size_t steps = cat.dim(1);
  return {cat.reshaped({steps, config.feature_channels()}), tr.cb1};
}

template <typename T>
T classify_orientation(const BasicTensor<T>& cb1, const ModelParams<T>& p) {
  auto z = dense(global_avg_pool(cb1), p.orient_w, p.orient_b);
  return activate(z[0], Activation::kSigmoid);
}

template <typename T>
BasicTensor<T> bilstm_projection(const BasicTensor<T>& seq, T yp, const ModelParams<T>& p, ForwardTrace<T>* trace) {
  check(seq.rank() == 2 && seq.dim(0) >= 1, ErrorCode::kShape, "bilstm: expected T x F sequence");
  BasicTensor<T> orient({seq.dim(0), 1}, yp);
  auto in = concat_channels(seq, orient);
  auto fw = lstm_forward(in, p.lstm_fw, false, trace ? &trace->fw : nullptr);
  auto bw = lstm_forward(in, p.lstm_bw, true, trace ? &trace->bw : nullptr);
  if (trace) trace->lstm_in = in;
  auto out = concat_channels(fw, bw);
  if (trace) trace->hidden = out;
  return out;
}

template <typename T>
BasicTensor<T> predict_frames(const BasicTensor<T>& seq, const ModelParams<T>& p) {
  return dense(seq, p.pred_w, p.pred_b);
}

template <typename T>
ForwardOutput<T> forward(const BasicTensor<T>& img, const ModelParams<T>& p, const ModelConfig& config,
                         ForwardTrace<T>* trace, std::optional<T> conditioning) {
  auto feats = extract_features(img, p, config, trace ? &trace->feat : nullptr);
  auto gap = global_avg_pool(feats.cb1);
  const T logit = dense(gap, p.orient_w, p.orient_b)[0];
  const T yp = activate(logit, Activation::kSigmoid);
  if (trace) {
    trace->gap = gap;
    trace->orient_logit = logit;
    trace->yp = yp;
  }
  auto hidden = bilstm_projection(feats.seq, conditioning.value_or(yp), p, trace);
  return {predict_frames(hidden, p), yp};
}

template <typename T>
ModelParams<T> backward(const ModelParams<T>& p, const ModelConfig& config, const ForwardTrace<T>& tr,
                        const BasicTensor<T>& dlogits, T dyp) {
  auto g = make_params<T>(config);
  const auto& ft = tr.feat;

  auto gp = dense_backward(tr.hidden, p.pred_w, dlogits);
  g.pred_w = std::move(gp.dw);
  g.pred_b = std::move(gp.db);

  const std::size_t P = config.projection;
  auto gfw = lstm_backward(p.lstm_fw, tr.fw, slice_channels(gp.dx, 0, P));
  auto gbw = lstm_backward(p.lstm_bw, tr.bw, slice_channels(gp.dx, P, P));
  g.lstm_fw = std::move(gfw.dp);
  g.lstm_bw = std::move(gbw.dp);
  auto din = std::move(gfw.dx);
  din += gbw.dx;

  // The appended orientation column carries no gradient back to yp.
  const std::size_t F = config.feature_channels();
  const std::size_t steps = din.dim(0);
  auto dseq = slice_channels(din, 0, F);

  // Orientation head: yp = sigmoid(gap . w + b).
  const T dlogit = dyp * tr.yp * (T(1) - tr.yp);
  auto go = dense_backward(tr.gap, p.orient_w, BasicTensor<T>({1}, {dlogit}));
  g.orient_w = std::move(go.dw);
  g.orient_b = std::move(go.db);
  auto dcb1 = global_avg_pool_backward(ft.cb1.shape(), go.dx);

  // Split the concatenated features back into skip and top paths.
  auto dcat = dseq.reshaped({1, steps, F});
  auto ds2 = slice_channels(dcat, 0, config.c2);
  auto dtop = slice_channels(dcat, config.c2, config.c4);
  auto ds1 = maxpool_h_backward(ft.s1, ds2);
  dcb1 += maxpool_h_backward(ft.cb1, ds1);

  auto dp4 = attention_backward(p.att2, ft.att2, dtop, g.att2);
  auto dp3 = conv_block_backward(ft.p3, p.conv4_w, ft.z4, ft.a4, dp4, g.conv4_w, g.conv4_b);
  dcb1 += conv_block_backward(ft.cb1, p.conv3_w, ft.z3, ft.a3, dp3, g.conv3_w, g.conv3_b);
  auto dq2 = attention_backward(p.att1, ft.att1, dcb1, g.att1);
  auto dp2 = avgpool_w_backward(dq2);
  auto dp1 = conv_block_backward(ft.p1, p.conv2_w, ft.z2, ft.a2, dp2, g.conv2_w, g.conv2_b);
  conv_block_backward(ft.x, p.conv1_w, ft.z1, ft.a1, dp1, g.conv1_w, g.conv1_b);
  return g;
}

double orientation_loss(std::span<const double> yp, std::span<const int> labels) {
  check(yp.size() == labels.size() && !yp.empty(), ErrorCode::kInvalidArgument,
        "orientation_loss: need matching, nonempty prediction and label lists");
  constexpr double kEps = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < yp.size(); ++i) {
    const double p = std::clamp(yp[i], kEps, 1.0 - kEps);
    sum += labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(yp.size());
}

template <typename T>
SampleLoss<T> sample_loss(const ModelParams<T>& p, const ModelConfig& config, const BasicTensor<T>& img,
                          const LabelSequence& target, int orientation, double lambda, ModelParams<T>* grads,
                          T scale, std::optional<T> conditioning) {
  ForwardTrace<T> trace;
  auto out = forward(img, p, config, grads ? &trace : nullptr, conditioning);
  auto logp = log_softmax_lastdim(out.logits);
  auto ctc = ctc_loss(logp, target, grads != nullptr);

  const T eps = T(1e-7);
  const T yp = out.yp;
  const T pc = std::clamp(yp, eps, T(1) - eps);
  const T y = orientation ? T(1) : T(0);
  const T bce = -(y * std::log(pc) + (T(1) - y) * std::log(T(1) - pc));

  SampleLoss<T> loss{ctc.loss, bce, static_cast<T>(ctc.loss + static_cast<T>(lambda) * bce), yp};
  if (!grads) return loss;

  auto dlogp = std::move(ctc.grad);
  dlogp *= scale;
  auto dlogits = log_softmax_lastdim_backward(logp, dlogp);
  T dyp = 0;
  if (yp > eps && yp < T(1) - eps) dyp = -y / yp + (T(1) - y) / (T(1) - yp);
  dyp *= static_cast<T>(lambda) * scale;

  auto g = backward(p, config, trace, dlogits, dyp);
  std::vector<BasicTensor<T>*> dst;
  grads->for_each([&](std::string_view, BasicTensor<T>& t) { dst.push_back(&t); });
  std::size_t i = 0;
  g.for_each([&](std::string_view, const BasicTensor<T>& t) { *dst.at(i++) += t; });
  return loss;
}

#define STRIDE_INSTANTIATE_MODEL(T)                                                                                \
  template ModelParams<T> make_params<T>(const ModelConfig&);                                                      \
  template ModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);                                       \
  template Features<T> extract_features(const BasicTensor<T>&, const ModelParams<T>&, const ModelConfig&,          \
                                        FeatureTrace<T>*);                                                         \
  template T classify_orientation(const BasicTensor<T>&, const ModelParams<T>&);                                   \
  template BasicTensor<T> bilstm_projection(const BasicTensor<T>&, T, const ModelParams<T>&, ForwardTrace<T>*);    \
  template BasicTensor<T> predict_frames(const BasicTensor<T>&, const ModelParams<T>&);                            \
  template ForwardOutput<T> forward(const BasicTensor<T>&, const ModelParams<T>&, const ModelConfig&,              \
                                    ForwardTrace<T>*, std::optional<T>);                                           \
  template ModelParams<T> backward(const ModelParams<T>&, const ModelConfig&, const ForwardTrace<T>&,              \
                                   const BasicTensor<T>&, T);                                                      \
  template SampleLoss<T> sample_loss(const ModelParams<T>&, const ModelConfig&, const BasicTensor<T>&,             \
                                     const LabelSequence&, int, double, ModelParams<T>*, T, std::optional<T>);

STRIDE_INSTANTIATE_MODEL(float)
STRIDE_INSTANTIATE_MODEL(double)

template ModelParams<double> cast_params<double, float>(const ModelParams<float>&, const ModelConfig&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&, const ModelConfig&);

}  // namespace stride
