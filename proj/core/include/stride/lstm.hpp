// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Unidirectional LSTM with a recurrent projection layer (no peepholes).
// Gates are computed from [x_t; r_{t-1}] where r is the projected output.

#pragma once

#include <cstddef>
#include <vector>

#include "stride/tensor.hpp"

namespace stride {

template <typename T>
struct LstmParams {
  BasicTensor<T> w;     // (input + proj) x 4*hidden, gate blocks ordered i, f, g, o
  BasicTensor<T> b;     // 4*hidden
  BasicTensor<T> proj;  // hidden x proj

  std::size_t hidden() const { return proj.dim(0); }
  std::size_t projection() const { return proj.dim(1); }
  std::size_t input() const { return w.dim(0) - proj.dim(1); }
};

template <typename T>
LstmParams<T> make_lstm_params(std::size_t input, std::size_t hidden, std::size_t projection);

template <typename T>
struct LstmTrace {
  bool reverse = false;
  // Indexed by time step (not processing order).
  std::vector<std::vector<T>> v, gates, c, tanh_c, m;
};

template <typename T>
struct LstmGrads {
  BasicTensor<T> dx;
  LstmParams<T> dp;
};

/// seq: T x input -> T x projection. `reverse` runs from the last step to the
/// first; outputs stay indexed by the original time step.
template <typename T>
BasicTensor<T> lstm_forward(const BasicTensor<T>& seq, const LstmParams<T>& p, bool reverse,
                            LstmTrace<T>* trace = nullptr);

template <typename T>
LstmGrads<T> lstm_backward(const LstmParams<T>& p, const LstmTrace<T>& trace, const BasicTensor<T>& dout);

}  // namespace stride
