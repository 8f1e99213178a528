// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/attention.hpp"

#include <algorithm>

namespace stride {

namespace {

template <typename T>
BasicTensor<T> mlp_forward(const BasicTensor<T>& in, const BasicTensor<T>& w1, const BasicTensor<T>& b1,
                           const BasicTensor<T>& w2, const BasicTensor<T>& b2, MlpTrace<T>& tr) {
  tr.in = in;
  tr.pre = dense(in, w1, b1);
  tr.hid = activation(tr.pre, Activation::kRelu);
  tr.out = dense(tr.hid, w2, b2);
  return tr.out;
}

// Returns d(in); accumulates weight grads.
template <typename T>
BasicTensor<T> mlp_backward(const MlpTrace<T>& tr, const BasicTensor<T>& w1, const BasicTensor<T>& w2,
                            const BasicTensor<T>& dout, BasicTensor<T>& dw1, BasicTensor<T>& db1,
                            BasicTensor<T>& dw2, BasicTensor<T>& db2) {
  auto g2 = dense_backward(tr.hid, w2, dout);
  dw2 += g2.dw;
  db2 += g2.db;
  auto dpre = activation_backward(tr.pre, tr.hid, g2.dx, Activation::kRelu);
  auto g1 = dense_backward(tr.in, w1, dpre);
  dw1 += g1.dw;
  db1 += g1.db;
  return g1.dx;
}

template <typename T>
BasicTensor<T> sigmoid_grad(const BasicTensor<T>& gate, const BasicTensor<T>& dgate) {
  BasicTensor<T> dz(gate.shape());
  for (std::size_t i = 0; i < gate.size(); ++i) dz[i] = dgate[i] * gate[i] * (T(1) - gate[i]);
  return dz;
}

template <typename T>
CbamParams<T> zeros_like(const CbamParams<T>& p) {
  return {BasicTensor<T>(p.w1.shape()), BasicTensor<T>(p.b1.shape()),    BasicTensor<T>(p.w2.shape()),
          BasicTensor<T>(p.b2.shape()), BasicTensor<T>(p.sam_w.shape()), BasicTensor<T>(p.sam_b.shape())};
}

}  // namespace

std::size_t sam_kernel_for(std::size_t height, std::size_t width, std::size_t preferred) {
  std::size_t k = std::min({preferred, height, width});
  if (k % 2 == 0) --k;
  return std::max<std::size_t>(k, 1);
}

template <typename T>
GseParams<T> make_gse_params(std::size_t channels, std::size_t reduction) {
  check(reduction >= 1 && channels % reduction == 0, ErrorCode::kInvalidArgument,
        "GSE reduction " + std::to_string(reduction) + " does not divide " + std::to_string(channels) + " channels");
  const std::size_t hidden = channels / reduction;
  return {BasicTensor<T>({channels, hidden}), BasicTensor<T>({hidden}), BasicTensor<T>({hidden, channels}),
          BasicTensor<T>({channels})};
}

template <typename T>
CbamParams<T> make_cbam_params(std::size_t channels, std::size_t reduction, std::size_t kernel) {
  check(reduction >= 1 && channels >= 1, ErrorCode::kInvalidArgument, "CBAM needs channels >= 1 and reduction >= 1");
  check(kernel % 2 == 1, ErrorCode::kInvalidArgument, "SAM kernel must be odd");
  const std::size_t hidden = std::max<std::size_t>(1, channels / reduction);
  return {BasicTensor<T>({channels, hidden}), BasicTensor<T>({hidden}),
          BasicTensor<T>({hidden, channels}), BasicTensor<T>({channels}),
          BasicTensor<T>({kernel, kernel, 2, 1}), BasicTensor<T>({1})};
}

template <typename T>
BasicTensor<T> gse_block(const BasicTensor<T>& x, const GseParams<T>& p, GseTrace<T>* trace) {
  GseTrace<T> local;
  GseTrace<T>& tr = trace ? *trace : local;
  auto z = mlp_forward(global_avg_pool(x), p.w1, p.b1, p.w2, p.b2, tr.mlp);
  tr.gate = activation(z, Activation::kSigmoid);
  return scale_channels(x, tr.gate);
}

template <typename T>
GseGrads<T> gse_block_backward(const BasicTensor<T>& x, const GseParams<T>& p, const GseTrace<T>& tr,
                               const BasicTensor<T>& dy) {
  GseGrads<T> g{BasicTensor<T>(), make_gse_params<T>(p.channels(), p.channels() / p.hidden())};
  auto [dx, dgate] = scale_channels_backward(x, tr.gate, dy);
  auto dz = sigmoid_grad(tr.gate, dgate);
  auto ds = mlp_backward(tr.mlp, p.w1, p.w2, dz, g.dp.w1, g.dp.b1, g.dp.w2, g.dp.b2);
  dx += global_avg_pool_backward(x.shape(), ds);
  g.dx = std::move(dx);
  return g;
}

template <typename T>
BasicTensor<T> cam(const BasicTensor<T>& x, const CbamParams<T>& p, CamTrace<T>* trace) {
  CamTrace<T> local;
  CamTrace<T>& tr = trace ? *trace : local;
  auto za = mlp_forward(global_avg_pool(x), p.w1, p.b1, p.w2, p.b2, tr.avg);
  auto zm = mlp_forward(global_max_pool(x), p.w1, p.b1, p.w2, p.b2, tr.max);
  za += zm;
  tr.gate = activation(za, Activation::kSigmoid);
  return scale_channels(x, tr.gate);
}

template <typename T>
BasicTensor<T> cam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const CamTrace<T>& tr,
                            const BasicTensor<T>& dy, CbamParams<T>& dp) {
  auto [dx, dgate] = scale_channels_backward(x, tr.gate, dy);
  auto dz = sigmoid_grad(tr.gate, dgate);
  auto da = mlp_backward(tr.avg, p.w1, p.w2, dz, dp.w1, dp.b1, dp.w2, dp.b2);
  auto dm = mlp_backward(tr.max, p.w1, p.w2, dz, dp.w1, dp.b1, dp.w2, dp.b2);
  dx += global_avg_pool_backward(x.shape(), da);
  dx += global_max_pool_backward(x, dm);
  return dx;
}

template <typename T>
BasicTensor<T> sam(const BasicTensor<T>& x, const CbamParams<T>& p, SamTrace<T>* trace) {
  SamTrace<T> local;
  SamTrace<T>& tr = trace ? *trace : local;
  tr.map = channel_mean_max(x);
  tr.gate = activation(conv2d(tr.map, p.sam_w, p.sam_b), Activation::kSigmoid);
  return scale_spatial(x, tr.gate);
}

template <typename T>
BasicTensor<T> sam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const SamTrace<T>& tr,
                            const BasicTensor<T>& dy, CbamParams<T>& dp) {
  auto [dx, dgate] = scale_spatial_backward(x, tr.gate, dy);
  auto dz = sigmoid_grad(tr.gate, dgate);
  auto gc = conv2d_backward(tr.map, p.sam_w, dz);
  dp.sam_w += gc.dw;
  dp.sam_b += gc.db;
  dx += channel_mean_max_backward(x, gc.dx);
  return dx;
}

template <typename T>
BasicTensor<T> cbam(const BasicTensor<T>& x, const CbamParams<T>& p, CbamTrace<T>* trace) {
  CbamTrace<T> local;
  CbamTrace<T>& tr = trace ? *trace : local;
  tr.cam_out = cam(x, p, &tr.cam);
  return sam(tr.cam_out, p, &tr.sam);
}

template <typename T>
CbamGrads<T> cbam_backward(const BasicTensor<T>& x, const CbamParams<T>& p, const CbamTrace<T>& tr,
                           const BasicTensor<T>& dy) {
  CbamGrads<T> g{BasicTensor<T>(), zeros_like(p)};
  auto dmid = sam_backward(tr.cam_out, p, tr.sam, dy, g.dp);
  g.dx = cam_backward(x, p, tr.cam, dmid, g.dp);
  return g;
}

#define STRIDE_INSTANTIATE_ATTENTION(T)                                                                           \
  template GseParams<T> make_gse_params<T>(std::size_t, std::size_t);                                              \
  template CbamParams<T> make_cbam_params<T>(std::size_t, std::size_t, std::size_t);                               \
  template BasicTensor<T> gse_block(const BasicTensor<T>&, const GseParams<T>&, GseTrace<T>*);                     \
  template GseGrads<T> gse_block_backward(const BasicTensor<T>&, const GseParams<T>&, const GseTrace<T>&,          \
                                          const BasicTensor<T>&);                                                  \
  template BasicTensor<T> cam(const BasicTensor<T>&, const CbamParams<T>&, CamTrace<T>*);                          \
  template BasicTensor<T> sam(const BasicTensor<T>&, const CbamParams<T>&, SamTrace<T>*);                          \
  template BasicTensor<T> cbam(const BasicTensor<T>&, const CbamParams<T>&, CbamTrace<T>*);                        \
  template BasicTensor<T> cam_backward(const BasicTensor<T>&, const CbamParams<T>&, const CamTrace<T>&,            \
                                       const BasicTensor<T>&, CbamParams<T>&);                                     \
  template BasicTensor<T> sam_backward(const BasicTensor<T>&, const CbamParams<T>&, const SamTrace<T>&,            \
                                       const BasicTensor<T>&, CbamParams<T>&);                                     \
  template CbamGrads<T> cbam_backward(const BasicTensor<T>&, const CbamParams<T>&, const CbamTrace<T>&,            \
                                      const BasicTensor<T>&);

STRIDE_INSTANTIATE_ATTENTION(float)
STRIDE_INSTANTIATE_ATTENTION(double)

}  // namespace stride
