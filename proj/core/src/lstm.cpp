// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "stride/ops.hpp"

namespace stride {

template <typename T>
LstmParams<T> make_lstm_params(std::size_t input, std::size_t hidden, std::size_t projection) {
  check(input >= 1 && hidden >= 1 && projection >= 1, ErrorCode::kInvalidArgument, "LSTM sizes must be positive");
  return {BasicTensor<T>({input + projection, 4 * hidden}), BasicTensor<T>({4 * hidden}),
          BasicTensor<T>({hidden, projection})};
}

template <typename T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& seq, const LstmParams<T>& p, bool reverse, LstmTrace<T>* trace) {
  const std::size_t in = p.input(), H = p.hidden(), P = p.projection();
  check(seq.rank() == 2 && seq.dim(1) == in, ErrorCode::kShape,
        "lstm: sequence " + shape_str(seq.shape()) + " expects " + std::to_string(in) + " features");
  const std::size_t steps = seq.dim(0);
  const std::size_t V = in + P, G = 4 * H;

  LstmTrace<T> local;
  LstmTrace<T>& tr = trace ? *trace : local;
  tr.reverse = reverse;
  tr.v.assign(steps, {});
  tr.gates.assign(steps, {});
  tr.c.assign(steps, {});
  tr.tanh_c.assign(steps, {});
  tr.m.assign(steps, {});

  BasicTensor<T> out({steps, P});
  std::vector<T> r_prev(P, T(0)), c_prev(H, T(0));
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    auto& v = tr.v[t];
    v.resize(V);
    std::copy(seq.data() + t * in, seq.data() + (t + 1) * in, v.begin());
    std::copy(r_prev.begin(), r_prev.end(), v.begin() + static_cast<std::ptrdiff_t>(in));

    auto& a = tr.gates[t];
    a.assign(p.b.data(), p.b.data() + G);
    for (std::size_t n = 0; n < V; ++n) {
      const T vn = v[n];
      if (vn == T(0)) continue;
      const T* wr = p.w.data() + n * G;
      for (std::size_t j = 0; j < G; ++j) a[j] += vn * wr[j];
    }
    for (std::size_t j = 0; j < H; ++j) {
      a[j] = activate(a[j], Activation::kSigmoid);
      a[H + j] = activate(a[H + j], Activation::kSigmoid);
      a[2 * H + j] = std::tanh(a[2 * H + j]);
      a[3 * H + j] = activate(a[3 * H + j], Activation::kSigmoid);
    }
    auto& c = tr.c[t];
    auto& tc = tr.tanh_c[t];
    auto& m = tr.m[t];
    c.resize(H);
    tc.resize(H);
    m.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
      c[j] = a[H + j] * c_prev[j] + a[j] * a[2 * H + j];
      tc[j] = std::tanh(c[j]);
      m[j] = a[3 * H + j] * tc[j];
    }
    T* r = out.data() + t * P;
    for (std::size_t j = 0; j < H; ++j) {
      const T mj = m[j];
      const T* pr = p.proj.data() + j * P;
      for (std::size_t q = 0; q < P; ++q) r[q] += mj * pr[q];
    }
    std::copy(r, r + P, r_prev.begin());
    c_prev = c;
  }
  return out;
}

template <typename T>
LstmGrads<T> lstm_backward(const LstmParams<T>& p, const LstmTrace<T>& tr, const BasicTensor<T>& dout) {
  const std::size_t in = p.input(), H = p.hidden(), P = p.projection();
  const std::size_t steps = tr.v.size();
  const std::size_t V = in + P, G = 4 * H;
  check(dout.shape() == Shape{steps, P}, ErrorCode::kShape, "lstm_backward: upstream " + shape_str(dout.shape()));

  LstmGrads<T> g{BasicTensor<T>({steps, in}), make_lstm_params<T>(in, H, P)};
  std::vector<T> dr_next(P, T(0)), dc_next(H, T(0)), dr(P), dm(H), da(G), dv(V);
  for (std::size_t k = 0; k < steps; ++k) {
    // Walk processing order backwards.
    const std::size_t t = tr.reverse ? k : steps - 1 - k;
    const bool has_prev = k + 1 < steps;
    const std::size_t tp = tr.reverse ? t + 1 : t - 1;  // previously processed step

    for (std::size_t q = 0; q < P; ++q) dr[q] = dout[t * P + q] + dr_next[q];
    const auto& m = tr.m[t];
    const auto& a = tr.gates[t];
    const auto& tc = tr.tanh_c[t];
    for (std::size_t j = 0; j < H; ++j) {
      const T* pr = p.proj.data() + j * P;
      T* dpr = g.dp.proj.data() + j * P;
      T acc = 0;
      for (std::size_t q = 0; q < P; ++q) {
        acc += pr[q] * dr[q];
        dpr[q] += m[j] * dr[q];
      }
      dm[j] = acc;
    }
    for (std::size_t j = 0; j < H; ++j) {
      const T i = a[j], f = a[H + j], gg = a[2 * H + j], o = a[3 * H + j];
      const T c_prev = has_prev ? tr.c[tp][j] : T(0);
      const T dc = dc_next[j] + dm[j] * o * (T(1) - tc[j] * tc[j]);
      da[j] = dc * gg * i * (T(1) - i);
      da[H + j] = dc * c_prev * f * (T(1) - f);
      da[2 * H + j] = dc * i * (T(1) - gg * gg);
      da[3 * H + j] = dm[j] * tc[j] * o * (T(1) - o);
      dc_next[j] = dc * f;
    }
    const auto& v = tr.v[t];
    for (std::size_t j = 0; j < G; ++j) g.dp.b[j] += da[j];
    for (std::size_t n = 0; n < V; ++n) {
      const T* wr = p.w.data() + n * G;
      T* dwr = g.dp.w.data() + n * G;
      const T vn = v[n];
      T acc = 0;
      for (std::size_t j = 0; j < G; ++j) {
        acc += wr[j] * da[j];
        dwr[j] += vn * da[j];
      }
      dv[n] = acc;
    }
    std::copy(dv.begin(), dv.begin() + static_cast<std::ptrdiff_t>(in), g.dx.data() + t * in);
    std::copy(dv.begin() + static_cast<std::ptrdiff_t>(in), dv.end(), dr_next.begin());
  }
  return g;
}

template LstmParams<float> make_lstm_params<float>(std::size_t, std::size_t, std::size_t);
template LstmParams<double> make_lstm_params<double>(std::size_t, std::size_t, std::size_t);
template BasicTensor<float> lstm_forward(const BasicTensor<float>&, const LstmParams<float>&, bool,
                                         LstmTrace<float>*);
template BasicTensor<double> lstm_forward(const BasicTensor<double>&, const LstmParams<double>&, bool,
                                          LstmTrace<double>*);
template LstmGrads<float> lstm_backward(const LstmParams<float>&, const LstmTrace<float>&,
                                        const BasicTensor<float>&);
template LstmGrads<double> lstm_backward(const LstmParams<double>&, const LstmTrace<double>&,
                                         const BasicTensor<double>&);

}  // namespace stride
