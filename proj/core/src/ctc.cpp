// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stride {

namespace {

template <typename T>
T log_add(T a, T b) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

void check_target(const LabelSequence& target, int blank) {
  for (int l : target)
    check(l >= 0 && l < blank, ErrorCode::kInvalidArgument,
          "target label " + std::to_string(l) + " outside [0, " + std::to_string(blank) + ")");
}

}  // namespace

LabelSequence collapse(const std::vector<int>& path, int blank) {
  LabelSequence out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

std::size_t ctc_min_frames(const LabelSequence& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++n;
  return n;
}

template <typename T>
CtcResult<T> ctc_loss(const BasicTensor<T>& log_probs, const LabelSequence& target, bool want_grad) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  check(log_probs.rank() == 2 && log_probs.dim(0) >= 1 && log_probs.dim(1) >= 1, ErrorCode::kShape,
        "ctc_loss: expected T x K log-probabilities, got " + shape_str(log_probs.shape()));
  const std::size_t steps = log_probs.dim(0), K = log_probs.dim(1);
  const int blank = static_cast<int>(K) - 1;
  check_target(target, blank);
  check(ctc_min_frames(target) <= steps, ErrorCode::kNoAlignment,
        "target needs " + std::to_string(ctc_min_frames(target)) + " frames, have " + std::to_string(steps));

  // Blank-extended target: blank, y1, blank, y2, ..., blank.
  const std::size_t S = 2 * target.size() + 1;
  std::vector<int> ext(S, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto skip_allowed = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };
  auto lp = [&](std::size_t t, std::size_t s) { return log_probs[t * K + static_cast<std::size_t>(ext[s])]; };

  std::vector<T> alpha(steps * S, kNegInf);
  alpha[0] = lp(0, 0);
  if (S > 1) alpha[1] = lp(0, 1);
  for (std::size_t t = 1; t < steps; ++t) {
    const T* prev = alpha.data() + (t - 1) * S;
    T* cur = alpha.data() + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      T acc = prev[s];
      if (s >= 1) acc = log_add(acc, prev[s - 1]);
      if (skip_allowed(s)) acc = log_add(acc, prev[s - 2]);
      cur[s] = acc == kNegInf ? kNegInf : acc + lp(t, s);
    }
  }
  const T* last = alpha.data() + (steps - 1) * S;
  const T log_p = S > 1 ? log_add(last[S - 1], last[S - 2]) : last[S - 1];
  check(std::isfinite(log_p), ErrorCode::kNumeric, "ctc_loss: total path probability underflowed");

  CtcResult<T> result{-log_p, BasicTensor<T>()};
  if (!want_grad) return result;

  std::vector<T> beta(steps * S, kNegInf);
  beta[(steps - 1) * S + S - 1] = lp(steps - 1, S - 1);
  if (S > 1) beta[(steps - 1) * S + S - 2] = lp(steps - 1, S - 2);
  for (std::size_t t = steps - 1; t-- > 0;) {
    const T* next = beta.data() + (t + 1) * S;
    T* cur = beta.data() + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      T acc = next[s];
      if (s + 1 < S) acc = log_add(acc, next[s + 1]);
      if (s + 2 < S && skip_allowed(s + 2)) acc = log_add(acc, next[s + 2]);
      cur[s] = acc == kNegInf ? kNegInf : acc + lp(t, s);
    }
  }

  // d(-log p)/d lp[t,k] = -sum_{s: ext[s]=k} exp(alpha + beta - lp[t,k] - log p)
  result.grad = BasicTensor<T>({steps, K});
  std::vector<T> acc(K);
  for (std::size_t t = 0; t < steps; ++t) {
    std::fill(acc.begin(), acc.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const T ab = alpha[t * S + s] + beta[t * S + s];
      const auto k = static_cast<std::size_t>(ext[s]);
      acc[k] = log_add(acc[k], ab);
    }
    for (std::size_t k = 0; k < K; ++k)
      if (acc[k] != kNegInf) result.grad[t * K + k] = -std::exp(acc[k] - log_probs[t * K + k] - log_p);
  }
  return result;
}

double ctc_brute_force(const BasicTensor<double>& log_probs, const LabelSequence& target) {
  check(log_probs.rank() == 2 && log_probs.dim(0) >= 1, ErrorCode::kShape, "ctc_brute_force: expected T x K input");
  const std::size_t steps = log_probs.dim(0), K = log_probs.dim(1);
  const int blank = static_cast<int>(K) - 1;
  check_target(target, blank);
  double paths = std::pow(static_cast<double>(K), static_cast<double>(steps));
  check(paths <= 1e7, ErrorCode::kGuardExceeded, "brute force would enumerate " + std::to_string(paths) + " paths");

  std::vector<int> path(steps, 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == target) {
      double p = 1.0;
      for (std::size_t t = 0; t < steps; ++t) p *= std::exp(log_probs[t * K + static_cast<std::size_t>(path[t])]);
      total += p;
    }
    std::size_t t = 0;
    while (t < steps && ++path[t] == static_cast<int>(K)) path[t++] = 0;
    if (t == steps) break;
  }
  return total;
}

template <typename T>
LabelSequence greedy_decode_indices(const BasicTensor<T>& logits) {
  check(logits.rank() == 2, ErrorCode::kShape, "greedy_decode: expected T x K logits");
  const std::size_t steps = logits.dim(0), K = logits.dim(1);
  std::vector<int> path(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const T* row = logits.data() + t * K;
    path[t] = static_cast<int>(std::max_element(row, row + K) - row);
  }
  return collapse(path, static_cast<int>(K) - 1);
}

template <typename T>
std::u32string greedy_decode(const BasicTensor<T>& logits, const std::u32string& charset) {
  check(logits.rank() == 2 && logits.dim(1) == charset.size() + 1, ErrorCode::kShape,
        "greedy_decode: logits " + shape_str(logits.shape()) + " for a charset of " + std::to_string(charset.size()));
  std::u32string out;
  for (int l : greedy_decode_indices(logits)) out.push_back(charset[static_cast<std::size_t>(l)]);
  return out;
}

template CtcResult<float> ctc_loss(const BasicTensor<float>&, const LabelSequence&, bool);
template CtcResult<double> ctc_loss(const BasicTensor<double>&, const LabelSequence&, bool);
template LabelSequence greedy_decode_indices(const BasicTensor<float>&);
template LabelSequence greedy_decode_indices(const BasicTensor<double>&);
template std::u32string greedy_decode(const BasicTensor<float>&, const std::u32string&);
template std::u32string greedy_decode(const BasicTensor<double>&, const std::u32string&);

}  // namespace stride
