// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace stride {

bool should_rectify(double angle_deg, double threshold_deg) {
  check(threshold_deg > 0, ErrorCode::kInvalidArgument, "rectification threshold must be positive");
  return std::abs(angle_deg) > threshold_deg;
}

bool is_vertical_candidate(std::size_t h, std::size_t w, double ratio_threshold) {
  check(h > 0 && w > 0, ErrorCode::kInvalidArgument, "crop extents must be positive");
  return static_cast<double>(h) / static_cast<double>(w) > ratio_threshold;
}

bool is_degenerate(const std::array<Point, 4>& pts) {
  double scale = 0;
  for (const auto& p : pts) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double tol = 1e-9 * std::max(1.0, scale * scale);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (int c = b + 1; c < 4; ++c) {
        const double cross = (pts[b].x - pts[a].x) * (pts[c].y - pts[a].y) - (pts[b].y - pts[a].y) * (pts[c].x - pts[a].x);
        if (std::abs(cross) <= tol) return true;
      }
  return false;
}

Homography solve_homography(const std::array<Point, 4>& from, const std::array<Point, 4>& to) {
  check(!is_degenerate(from) && !is_degenerate(to), ErrorCode::kDegenerateQuad, "three corners are collinear");
  // Unknowns h0..h7 with h8 = 1:
  //   x' (h6 x + h7 y + 1) = h0 x + h1 y + h2
  //   y' (h6 x + h7 y + 1) = h3 x + h4 y + h5
  double A[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = from[i].x, y = from[i].y, u = to[i].x, v = to[i].y;
    double* r0 = A[2 * i];
    double* r1 = A[2 * i + 1];
    r0[0] = x, r0[1] = y, r0[2] = 1, r0[6] = -u * x, r0[7] = -u * y, r0[8] = u;
    r1[3] = x, r1[4] = y, r1[5] = 1, r1[6] = -v * x, r1[7] = -v * y, r1[8] = v;
  }
  for (int col = 0; col < 8; ++col) {
    int piv = col;
    for (int r = col + 1; r < 8; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    check(std::abs(A[piv][col]) > 1e-12, ErrorCode::kDegenerateQuad, "homography system is singular");
    std::swap(A[col], A[piv]);
    for (int r = 0; r < 8; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (int k = col; k < 9; ++k) A[r][k] -= f * A[col][k];
    }
  }
  Homography h{};
  for (int i = 0; i < 8; ++i) h[static_cast<std::size_t>(i)] = A[i][8] / A[i][i];
  h[8] = 1.0;
  return h;
}

Point apply(const Homography& h, Point p) {
  const double w = h[6] * p.x + h[7] * p.y + h[8];
  return {(h[0] * p.x + h[1] * p.y + h[2]) / w, (h[3] * p.x + h[4] * p.y + h[5]) / w};
}

Homography compose(const Homography& a, const Homography& b) {
  Homography r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[static_cast<std::size_t>(3 * i + j)] += a[static_cast<std::size_t>(3 * i + k)] * b[static_cast<std::size_t>(3 * k + j)];
  return r;
}

void sample_bilinear(const Tensor& img, double x, double y, float* out) {
  const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
  // Snap coordinates that are integers up to solver round-off so exact grids stay exact.
  if (std::abs(x - std::round(x)) < 1e-9) x = std::round(x);
  if (std::abs(y - std::round(y)) < 1e-9) y = std::round(y);
  const double fx = std::floor(x), fy = std::floor(y);
  const double ax = x - fx, ay = y - fy;
  const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
  for (std::size_t c = 0; c < C; ++c) out[c] = 0.0f;
  const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const long xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const long ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int k = 0; k < 4; ++k) {
    if (wts[k] == 0.0) continue;
    if (xs[k] < 0 || ys[k] < 0 || xs[k] >= static_cast<long>(W) || ys[k] >= static_cast<long>(H)) continue;
    const float* px = &img.at(static_cast<std::size_t>(ys[k]), static_cast<std::size_t>(xs[k]), 0);
    for (std::size_t c = 0; c < C; ++c) out[c] = static_cast<float>(out[c] + wts[k] * px[c]);
  }
}

Tensor warp_homography(const Tensor& img, const Homography& out_to_src, std::size_t out_w, std::size_t out_h) {
  check(img.rank() == 3, ErrorCode::kShape, "warp: expected H x W x C image");
  Tensor out({out_h, out_w, img.dim(2)});
  for (std::size_t v = 0; v < out_h; ++v)
    for (std::size_t u = 0; u < out_w; ++u) {
      const Point s = apply(out_to_src, {static_cast<double>(u), static_cast<double>(v)});
      if (!std::isfinite(s.x) || !std::isfinite(s.y)) continue;
      sample_bilinear(img, s.x, s.y, &out.at(v, u, 0));
    }
  return out;
}

Tensor warp_perspective(const Tensor& img, const Quad& quad, std::size_t out_w, std::size_t out_h) {
  check(out_w >= 1 && out_h >= 1, ErrorCode::kInvalidArgument, "warp output must be nonempty");
  check(!is_degenerate(quad.corners), ErrorCode::kDegenerateQuad, "quad has three collinear corners");
  const double w = static_cast<double>(out_w - 1), h = static_cast<double>(out_h - 1);
  // A 1-pixel output axis has coincident corners; widen the reference square so the solve stays regular.
  const double ws = out_w > 1 ? w : 1.0, hs = out_h > 1 ? h : 1.0;
  const std::array<Point, 4> dst_corners{Point{0, 0}, Point{ws, 0}, Point{ws, hs}, Point{0, hs}};
  return warp_homography(img, solve_homography(dst_corners, quad.corners), out_w, out_h);
}

std::pair<std::size_t, std::size_t> quad_extent(const Quad& q) {
  auto dist = [](Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); };
  const auto& c = q.corners;
  const double w = 0.5 * (dist(c[0], c[1]) + dist(c[3], c[2])) + 1.0;
  const double h = 0.5 * (dist(c[0], c[3]) + dist(c[1], c[2])) + 1.0;
  return {std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w))),
          std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h)))};
}

Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w, bool align_corners) {
  check(img.rank() == 3 && img.dim(0) > 0 && img.dim(1) > 0, ErrorCode::kShape, "resize: expected H x W x C image");
  check(out_h > 0 && out_w > 0, ErrorCode::kInvalidArgument, "resize: output must be nonempty");
  const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
  auto src_coord = [&](std::size_t d, std::size_t in, std::size_t out) {
    if (align_corners) return out > 1 ? static_cast<double>(d) * static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
    const double s = (static_cast<double>(d) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  Tensor out({out_h, out_w, C});
  for (std::size_t i = 0; i < out_h; ++i) {
    const double y = src_coord(i, H, out_h);
    const std::size_t y0 = static_cast<std::size_t>(std::floor(y)), y1 = std::min(y0 + 1, H - 1);
    const double ay = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < out_w; ++j) {
      const double x = src_coord(j, W, out_w);
      const std::size_t x0 = static_cast<std::size_t>(std::floor(x)), x1 = std::min(x0 + 1, W - 1);
      const double ax = x - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        const double top = (1 - ax) * img.at(y0, x0, c) + ax * img.at(y0, x1, c);
        const double bot = (1 - ax) * img.at(y1, x0, c) + ax * img.at(y1, x1, c);
        out.at(i, j, c) = static_cast<float>((1 - ay) * top + ay * bot);
      }
    }
  }
  return out;
}

Tensor rotate90_ccw(const Tensor& img) {
  const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
  Tensor out({W, H, C});
  // out(r, c) = in(c, W - 1 - r): the top row becomes the left column.
  for (std::size_t r = 0; r < W; ++r)
    for (std::size_t c = 0; c < H; ++c)
      for (std::size_t k = 0; k < C; ++k) out.at(r, c, k) = img.at(c, W - 1 - r, k);
  return out;
}

Tensor rotate90_cw(const Tensor& img) {
  const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
  Tensor out({W, H, C});
  for (std::size_t r = 0; r < W; ++r)
    for (std::size_t c = 0; c < H; ++c)
      for (std::size_t k = 0; k < C; ++k) out.at(r, c, k) = img.at(H - 1 - c, r, k);
  return out;
}

Tensor normalize_crop(const Tensor& img, bool vertical_candidate) {
  check(img.rank() == 3 && img.dim(0) > 0 && img.dim(1) > 0, ErrorCode::kInvalidArgument, "crop is empty");
  const Tensor src = vertical_candidate ? rotate90_ccw(img) : img;
  const double aspect = static_cast<double>(src.dim(1)) / static_cast<double>(src.dim(0));
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(kInputHeight * aspect)));
  Tensor scaled = resize_bilinear(src, kInputHeight, width);

  std::size_t padded = std::max(width + (width % 2), kMinInputWidth);
  Tensor out({kInputHeight, padded, src.dim(2)});
  for (std::size_t i = 0; i < kInputHeight; ++i)
    for (std::size_t j = 0; j < width; ++j)
      for (std::size_t c = 0; c < src.dim(2); ++c) out.at(i, j, c) = std::clamp(scaled.at(i, j, c), 0.0f, 1.0f);
  return out;
}

}  // namespace stride
