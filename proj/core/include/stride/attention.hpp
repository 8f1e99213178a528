// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Convolutional attention blocks: global squeeze-excite (GSE) and CBAM, which
// is a channel gate (CAM) followed by a spatial gate (SAM). All gates are
// sigmoids, so outputs are always a strict shrink of the input.

#pragma once

#include <cstddef>
#include <random>

#include "stride/ops.hpp"

namespace stride {

/// Bottleneck perceptron C -> hidden -> C shared by GSE and CAM.
template <typename T>
struct GseParams {
  BasicTensor<T> w1, b1, w2, b2;

  std::size_t channels() const { return w1.dim(0); }
  std::size_t hidden() const { return w1.dim(1); }
};

template <typename T>
struct CbamParams {
  BasicTensor<T> w1, b1, w2, b2;  // shared CAM perceptron
  BasicTensor<T> sam_w;           // ks x ks x 2 x 1
  BasicTensor<T> sam_b;           // 1

  std::size_t channels() const { return w1.dim(0); }
  std::size_t kernel() const { return sam_w.dim(0); }
};

/// Zero-initialised GSE parameters; `reduction` must divide `channels`.
template <typename T>
GseParams<T> make_gse_params(std::size_t channels, std::size_t reduction);

/// Zero-initialised CBAM parameters. The CAM hidden width is max(1, C / r).
template <typename T>
CbamParams<T> make_cbam_params(std::size_t channels, std::size_t reduction, std::size_t kernel);

/// Largest odd kernel <= min(height, width), capped at `preferred`.
std::size_t sam_kernel_for(std::size_t height, std::size_t width, std::size_t preferred = 7);

template <typename T>
struct GseGrads {
  BasicTensor<T> dx;
  GseParams<T> dp;
};

template <typename T>
struct CbamGrads {
  BasicTensor<T> dx;
  CbamParams<T> dp;
};

// Forward caches. Kept as plain aggregates so the model trace can hold them.
template <typename T>
struct MlpTrace {
  BasicTensor<T> in, pre, hid, out;
};

template <typename T>
struct GseTrace {
  MlpTrace<T> mlp;
  BasicTensor<T> gate;
};

template <typename T>
struct CamTrace {
  MlpTrace<T> avg, max;
  BasicTensor<T> gate;
};

template <typename T>
struct SamTrace {
  BasicTensor<T> map, gate;
};

template <typename T>
struct CbamTrace {
  CamTrace<T> cam;
  BasicTensor<T> cam_out;
  SamTrace<T> sam;
};

template <typename T>
BasicTensor<T> gse_block(const BasicTensor<T>& x, const GseParams<T>& p, GseTrace<T>* trace = nullptr);
template <typename T>
GseGrads<T> gse_block_backward(const BasicTensor<T>& x, const GseParams<T>& p, const GseTrace<T>& trace,
                               const BasicTensor<T>& dy);

template <typename T>
BasicTensor<T> cam(const BasicTensor<T>& x, const CbamParams<T>& p, CamTrace<T>* trace = nullptr);
template <typename T>
BasicTensor<T> sam(const BasicTensor<T>& x, const CbamParams<T>& p, SamTrace<T>* trace = nullptr);
template <typename T>
BasicTensor<T> cbam(const BasicTensor<T>& x, const CbamParams<T>& p, CbamTrace<T>* trace = nullptr);

// CAM/SAM backward accumulate parameter grads into `dp` and return dx.
template <typename T>
BasicTensor<T> cam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const CamTrace<T>& trace,
                            const BasicTensor<T>& dy, CbamParams<T>& dp);
template <typename T>
BasicTensor<T> sam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const SamTrace<T>& trace,
                            const BasicTensor<T>& dy, CbamParams<T>& dp);
template <typename T>
CbamGrads<T> cbam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const CbamTrace<T>& trace,
                           const BasicTensor<T>& dy);

}  // namespace stride
