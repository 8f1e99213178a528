// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable primitives. Every forward op has a matching *_backward that
// maps the upstream gradient (shaped like the op output) to gradients shaped
// like each input. Backward functions are linear in the upstream gradient.

#pragma once

#include <cstddef>

#include "stride/tensor.hpp"

namespace stride {

enum class Activation { kSigmoid, kRelu, kTanh };

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> dx, dw, db;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> dx, dw, db;
};

// x: H x W x Cin, w: kh x kw x Cin x Cout, b: Cout. Stride 1, "same" zero padding.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy);

// Halves the height axis by pairwise max; ties route the gradient to the upper row.
template <typename T>
BasicTensor<T> maxpool_h(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> maxpool_h_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy);

// Halves the width axis by pairwise mean.
template <typename T>
BasicTensor<T> avgpool_w(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> avgpool_w_backward(const BasicTensor<T>& dy);

// Affine map over the last axis: x[..., N] . w[N, M] + b[M].
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);
template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy);

template <typename T>
T activate(T v, Activation kind);
template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& x, Activation kind);
// Needs the forward input for relu and the forward output for sigmoid/tanh.
template <typename T>
BasicTensor<T> activation_backward(const BasicTensor<T>& x, const BasicTensor<T>& y, const BasicTensor<T>& dy,
                                   Activation kind);

template <typename T>
BasicTensor<T> softmax_lastdim(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> softmax_lastdim_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy);
template <typename T>
BasicTensor<T> log_softmax_lastdim(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> log_softmax_lastdim_backward(const BasicTensor<T>& logy, const BasicTensor<T>& dy);

// Concatenates along the last axis; leading axes must agree.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t count);

// Global pools over H x W -> C.
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& x_shape, const BasicTensor<T>& dy);
template <typename T>
BasicTensor<T> global_max_pool(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_max_pool_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy);

// H x W x C -> H x W x 2 holding [mean over C, max over C].
template <typename T>
BasicTensor<T> channel_mean_max(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> channel_mean_max_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy);

// out[i,j,c] = g[c] * x[i,j,c]
template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& g);
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> scale_channels_backward(const BasicTensor<T>& x, const BasicTensor<T>& g,
                                                                  const BasicTensor<T>& dy);

// out[i,j,c] = g[i,j] * x[i,j,c], g is H x W x 1.
template <typename T>
BasicTensor<T> scale_spatial(const BasicTensor<T>& x, const BasicTensor<T>& g);
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> scale_spatial_backward(const BasicTensor<T>& x, const BasicTensor<T>& g,
                                                                 const BasicTensor<T>& dy);

}  // namespace stride
