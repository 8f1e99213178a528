// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference validation of every analytic gradient in 64-bit.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stride/tensor.hpp"

namespace stride {

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  std::string name;
  std::size_t components = 0;
  double max_rel_error = 0;  // the gated figure
  double max_component_error = 0;
  bool per_tensor = false;  // gate on ||a - n|| / max(||a||, ||n||, 1e-8) per tensor
  double tolerance = 0;
  std::size_t attempts = 1;  // input draws needed to stay clear of ReLU/max kinks

  bool passed() const { return components > 0 && max_rel_error <= tolerance; }
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  double step = 1e-5;
  double op_tolerance = 1e-5;
  double model_tolerance = 1e-4;
  bool primitives = true;
  bool blocks = true;
  bool ctc = true;
  bool model = true;
};

struct GradCheckReport {
  std::vector<GradCheckResult> results;
  double seconds = 0;

  bool passed() const;
};

struct GradientErrors {
  double component = 0;  // worst relative_error over all components
  double tensor = 0;     // worst norm-relative error over the input tensors
  std::size_t components = 0;
};

/// Perturbs every component of every tensor in `inputs` by +-step, evaluates
/// `objective`, and compares against `analytic` (same order and shapes).
GradientErrors gradient_errors(const std::vector<TensorD*>& inputs, const std::vector<const TensorD*>& analytic,
                               const std::function<double()>& objective, double step);

GradCheckReport run_gradcheck(const GradCheckOptions& options);

}  // namespace stride
