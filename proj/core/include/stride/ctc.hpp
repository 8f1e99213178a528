// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Connectionist temporal classification: log-space forward-backward loss with
// analytic gradients, greedy decoding, and an exhaustive oracle for tests.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stride/tensor.hpp"

namespace stride {

/// Character-class indices over the charset; never contains the blank.
using LabelSequence = std::vector<int>;

/// The CTC many-to-one map: merge consecutive repeats, then drop blanks.
LabelSequence collapse(const std::vector<int>& path, int blank);

/// Minimum frame count for `target`: its length plus one blank per adjacent repeat.
std::size_t ctc_min_frames(const LabelSequence& target);

template <typename T>
struct CtcResult {
  T loss;
  BasicTensor<T> grad;  // d loss / d log_probs, T x K
};

/// `log_probs` is T x K with K - 1 the blank index. Throws kNoAlignment when
/// the target cannot fit in T frames and kInvalidArgument if it contains the blank.
template <typename T>
CtcResult<T> ctc_loss(const BasicTensor<T>& log_probs, const LabelSequence& target, bool want_grad = true);

/// p(target | frames) summed over every path in linear space. Test oracle only;
/// refuses instances with more than 1e7 paths.
double ctc_brute_force(const BasicTensor<double>& log_probs, const LabelSequence& target);

/// Frame-wise argmax (lowest index wins ties) followed by collapse.
template <typename T>
LabelSequence greedy_decode_indices(const BasicTensor<T>& logits);

template <typename T>
std::u32string greedy_decode(const BasicTensor<T>& logits, const std::u32string& charset);

inline double combined_loss(double ctc, double orient, double lambda) { return ctc + lambda * orient; }

}  // namespace stride
