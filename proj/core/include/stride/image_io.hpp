// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "stride/tensor.hpp"

namespace stride {

/// Binary PPM (P6, maxval 255). Values are clamped to [0, 1] and rounded to 8 bits.
std::string encode_ppm(const Tensor& img);
Tensor decode_ppm(const std::string& bytes);

void write_ppm(const Tensor& img, const std::filesystem::path& path);
Tensor read_ppm(const std::filesystem::path& path);

}  // namespace stride
