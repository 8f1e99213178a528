// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Crop normalisation: selective perspective rectification, 90-degree
// pre-rotation of tall crops, bilinear resize to height 16 and width padding.

#pragma once

#include <array>
#include <cstddef>

#include "stride/tensor.hpp"

namespace stride {

struct Point {
  double x = 0;
  double y = 0;
};

/// Corners clockwise from top-left in source pixel coordinates, plus the
/// rotation the detector reported for the word.
struct Quad {
  std::array<Point, 4> corners;
  double angle_deg = 0;
};

/// Row-major 3x3 projective matrix.
using Homography = std::array<double, 9>;

inline constexpr double kDefaultRectifyThresholdDeg = 10.0;
inline constexpr double kDefaultVerticalRatio = 1.5;
inline constexpr std::size_t kInputHeight = 16;
inline constexpr std::size_t kMinInputWidth = 8;

bool should_rectify(double angle_deg, double threshold_deg = kDefaultRectifyThresholdDeg);
bool is_vertical_candidate(std::size_t h, std::size_t w, double ratio_threshold = kDefaultVerticalRatio);

/// True when some three corners are (numerically) collinear.
bool is_degenerate(const std::array<Point, 4>& pts);

/// Homography taking each `from[i]` to `to[i]` (DLT on four correspondences).
Homography solve_homography(const std::array<Point, 4>& from, const std::array<Point, 4>& to);
Point apply(const Homography& h, Point p);
/// (a * b)(p) = a(b(p))
Homography compose(const Homography& a, const Homography& b);

/// Bilinear sample with zero padding outside the image; integer coordinates hit pixel centres.
void sample_bilinear(const Tensor& img, double x, double y, float* out);

/// out(u, v) = img(h(u, v)) for an output-to-source homography.
Tensor warp_homography(const Tensor& img, const Homography& out_to_src, std::size_t out_w, std::size_t out_h);

/// Rectifies `quad` into an out_h x out_w image; output corners map onto the quad corners.
Tensor warp_perspective(const Tensor& img, const Quad& quad, std::size_t out_w, std::size_t out_h);

/// Output size that keeps the quad's mean edge lengths.
std::pair<std::size_t, std::size_t> quad_extent(const Quad& quad);

/// Bilinear resize with edge clamping. With align_corners the corner pixel
/// centres of input and output coincide; otherwise half-pixel centres are used.
Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w, bool align_corners = false);

Tensor rotate90_ccw(const Tensor& img);
Tensor rotate90_cw(const Tensor& img);

/// Height 16, aspect-preserving width, right-padded with black to an even
/// width of at least 8, values clamped to [0, 1]. Tall crops are turned
/// counter-clockwise first so the top character lands at the first time step.
Tensor normalize_crop(const Tensor& img, bool vertical_candidate);

}  // namespace stride
