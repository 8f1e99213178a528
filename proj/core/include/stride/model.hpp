// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// The recognition network: convolutional feature extractor with optional
// attention blocks, a word-level orientation head, a projected BiLSTM that sees
// the orientation probability at every step, and a per-frame classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "stride/attention.hpp"
#include "stride/ctc.hpp"
#include "stride/lstm.hpp"

namespace stride {

enum class AttentionVariant { kNone, kGse1, kGse2, kCbam2 };

std::string_view to_string(AttentionVariant v);
AttentionVariant parse_attention(std::string_view name);

struct ModelConfig {
  std::u32string charset;
  std::size_t c1 = 32, c2 = 48, c3 = 64, c4 = 116;
  std::size_t lstm_hidden = 256;
  std::size_t projection = 128;
  std::size_t cbam_reduction = 8;
  std::size_t gse_reduction = 4;
  std::size_t sam_kernel = 7;
  AttentionVariant attention = AttentionVariant::kCbam2;
  std::size_t input_height = 16;

  std::size_t num_classes() const { return charset.size() + 1; }
  int blank() const { return static_cast<int>(charset.size()); }
  std::size_t feature_channels() const { return c2 + c4; }
  std::size_t lstm_input() const { return feature_channels() + 1; }

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Reference configuration: 236-character Latin charset, c2 + c4 = 164.
ModelConfig latin_config(AttentionVariant attention = AttentionVariant::kCbam2);

/// Reduced desk-scale configuration used for quick training runs.
ModelConfig toy_config(std::u32string charset, AttentionVariant attention = AttentionVariant::kCbam2);

template <typename T>
using AttentionParams = std::variant<std::monostate, GseParams<T>, CbamParams<T>>;

template <typename T>
struct ModelParams {
  BasicTensor<T> conv1_w, conv1_b, conv2_w, conv2_b;
  AttentionParams<T> att1;
  BasicTensor<T> conv3_w, conv3_b, conv4_w, conv4_b;
  AttentionParams<T> att2;
  BasicTensor<T> orient_w, orient_b;
  LstmParams<T> lstm_fw, lstm_bw;
  BasicTensor<T> pred_w, pred_b;

  /// Calls f(name, tensor) for every parameter tensor in canonical order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const BasicTensor<T>& t) { n += t.size(); });
    return n;
  }

 private:
  template <typename Self, typename F>
  static void visit_attention(Self& att, std::string_view prefix, F& f) {
    const std::string p(prefix);
    if (auto* g = std::get_if<GseParams<T>>(&att)) {
      f(p + ".w1", g->w1);
      f(p + ".b1", g->b1);
      f(p + ".w2", g->w2);
      f(p + ".b2", g->b2);
    } else if (auto* c = std::get_if<CbamParams<T>>(&att)) {
      f(p + ".mlp.w1", c->w1);
      f(p + ".mlp.b1", c->b1);
      f(p + ".mlp.w2", c->w2);
      f(p + ".mlp.b2", c->b2);
      f(p + ".sam.w", c->sam_w);
      f(p + ".sam.b", c->sam_b);
    }
  }

  template <typename Self, typename F>
  static void visit(Self& s, F& f) {
    f("conv1.w", s.conv1_w);
    f("conv1.b", s.conv1_b);
    f("conv2.w", s.conv2_w);
    f("conv2.b", s.conv2_b);
    visit_attention(s.att1, "att1", f);
    f("conv3.w", s.conv3_w);
    f("conv3.b", s.conv3_b);
    f("conv4.w", s.conv4_w);
    f("conv4.b", s.conv4_b);
    visit_attention(s.att2, "att2", f);
    f("orient.w", s.orient_w);
    f("orient.b", s.orient_b);
    f("lstm_fw.w", s.lstm_fw.w);
    f("lstm_fw.b", s.lstm_fw.b);
    f("lstm_fw.proj", s.lstm_fw.proj);
    f("lstm_bw.w", s.lstm_bw.w);
    f("lstm_bw.b", s.lstm_bw.b);
    f("lstm_bw.proj", s.lstm_bw.proj);
    f("pred.w", s.pred_w);
    f("pred.b", s.pred_b);
  }
};

/// All-zero parameters with the shapes implied by `config`.
template <typename T>
ModelParams<T> make_params(const ModelConfig& config);

/// Random initialisation (He/Glorot uniform, LSTM forget bias 1).
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p, const ModelConfig& config);

std::size_t param_count(const ModelConfig& config);

template <typename T>
struct AttentionTrace {
  BasicTensor<T> in;
  GseTrace<T> gse;
  CbamTrace<T> cbam;
};

template <typename T>
struct FeatureTrace {
  BasicTensor<T> x;
  BasicTensor<T> z1, a1, p1, z2, a2, p2, q2;
  AttentionTrace<T> att1;
  BasicTensor<T> cb1;
  BasicTensor<T> z3, a3, p3, z4, a4, p4;
  AttentionTrace<T> att2;
  BasicTensor<T> top;
  BasicTensor<T> s1, s2;  // skip path pooled 4 -> 2 -> 1
};

template <typename T>
struct Features {
  BasicTensor<T> seq;  // (W/2) x (c2 + c4)
  BasicTensor<T> cb1;  // 4 x (W/2) x c2
};

template <typename T>
struct ForwardTrace {
  FeatureTrace<T> feat;
  BasicTensor<T> gap;
  T orient_logit = 0;
  T yp = 0;
  BasicTensor<T> lstm_in;
  LstmTrace<T> fw, bw;
  BasicTensor<T> hidden;  // T x 2p
};

template <typename T>
struct ForwardOutput {
  BasicTensor<T> logits;  // (W/2) x (|L| + 1)
  T yp;                   // P(vertical)
};

/// img: 16 x W x 3 with W even and >= 8.
template <typename T>
Features<T> extract_features(const BasicTensor<T>& img, const ModelParams<T>& p, const ModelConfig& config,
                             FeatureTrace<T>* trace = nullptr);

template <typename T>
T classify_orientation(const BasicTensor<T>& cb1, const ModelParams<T>& p);

template <typename T>
BasicTensor<T> bilstm_projection(const BasicTensor<T>& seq, T yp, const ModelParams<T>& p,
                                 ForwardTrace<T>* trace = nullptr);

template <typename T>
BasicTensor<T> predict_frames(const BasicTensor<T>& seq, const ModelParams<T>& p);

/// `conditioning` replaces yp as the value appended to every BiLSTM step.
template <typename T>
ForwardOutput<T> forward(const BasicTensor<T>& img, const ModelParams<T>& p, const ModelConfig& config,
                         ForwardTrace<T>* trace = nullptr, std::optional<T> conditioning = std::nullopt);

/// Backpropagates d loss/d logits and d loss/d yp (direct orientation-loss
/// term) through a recorded forward pass. yp reaches the BiLSTM as a constant,
/// so the orientation head only learns from the orientation term.
template <typename T>
ModelParams<T> backward(const ModelParams<T>& p, const ModelConfig& config, const ForwardTrace<T>& trace,
                        const BasicTensor<T>& dlogits, T dyp);

/// Binary cross-entropy with yp clamped to [1e-7, 1 - 1e-7], averaged over the batch.
double orientation_loss(std::span<const double> yp, std::span<const int> labels);

template <typename T>
struct SampleLoss {
  T ctc = 0;
  T orient = 0;
  T total = 0;
  T yp = 0;
};

/// Per-sample combined objective ctc + lambda * bce. When `grads` is non-null
/// the gradient of `scale * total` is added into it.
template <typename T>
SampleLoss<T> sample_loss(const ModelParams<T>& p, const ModelConfig& config, const BasicTensor<T>& img,
                          const LabelSequence& target, int orientation, double lambda,
                          ModelParams<T>* grads = nullptr, T scale = T(1),
                          std::optional<T> conditioning = std::nullopt);

}  // namespace stride
