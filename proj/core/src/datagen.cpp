// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "stride/charset.hpp"
#include "stride/errors.hpp"
#include "stride/geometry.hpp"
#include "stride/image_io.hpp"

namespace stride {

namespace fs = std::filesystem;

char orientation_flag(Orientation o) { return o == Orientation::kVertical ? 'v' : 'h'; }

std::pair<std::size_t, std::size_t> word_canvas(std::size_t length, Orientation o, const GlyphAtlas& glyphs,
                                                std::size_t scale) {
  const std::size_t gw = glyphs.max_width(), gh = glyphs.max_height();
  const std::size_t margin = 2 * scale;
  if (o == Orientation::kHorizontal)
    return {gh * scale + 2 * margin, length * (gw + 1) * scale - scale + 2 * margin};
  return {length * (gh + 1) * scale - scale + 2 * margin, gw * scale + 2 * margin};
}

namespace {

void sample_clamped(const Tensor& img, double x, double y, float* out) {
  x = std::clamp(x, 0.0, static_cast<double>(img.dim(1) - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.dim(0) - 1));
  sample_bilinear(img, x, y, out);
}

Tensor box_blur(const Tensor& img, long radius) {
  if (radius <= 0) return img;
  const long H = static_cast<long>(img.dim(0)), W = static_cast<long>(img.dim(1));
  const std::size_t C = img.dim(2);
  const float norm = 1.0f / static_cast<float>(2 * radius + 1);
  Tensor tmp(img.shape());
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        float s = 0;
        for (long d = -radius; d <= radius; ++d) s += img.at(y, std::clamp(x + d, 0L, W - 1), c);
        tmp.at(y, x, c) = s * norm;
      }
  Tensor out(img.shape());
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        float s = 0;
        for (long d = -radius; d <= radius; ++d) s += tmp.at(std::clamp(y + d, 0L, H - 1), x, c);
        out.at(y, x, c) = s * norm;
      }
  return out;
}

}  // namespace

Tensor augment(const Tensor& img, const AugmentSpec& spec, Rng& rng) {
  check(img.rank() == 3 && img.size() > 0, ErrorCode::kShape, "augment: expected nonempty H x W x C image");
  check(spec.level >= 0.0 && spec.level <= 1.0, ErrorCode::kInvalidArgument, "augment level must lie in [0, 1]");
  const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);

  const double u_contrast = rng.uniform();
  const double u_rot = rng.uniform(-1.0, 1.0);
  std::array<double, 8> u_jit{};
  for (auto& u : u_jit) u = rng.uniform(-1.0, 1.0);
  const double u_blur = rng.uniform();
  const double u_noise = rng.uniform();

  Tensor out = img;

  // Contrast: pull every pixel toward the image mean.
  const double keep = 1.0 - spec.max_contrast_drop() * u_contrast;
  if (keep < 1.0) {
    std::vector<double> mean(C, 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) mean[i % C] += img[i];
    for (auto& m : mean) m /= static_cast<double>(H * W);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<float>(mean[i % C] + keep * (img[i] - mean[i % C]));
  }

  // Rotation about the centre plus independent corner jitter; pixels mapped
  // from outside the source repeat the nearest edge.
  if (spec.level > 0.0) {
    const double w = static_cast<double>(W - 1), h = static_cast<double>(H - 1);
    const double jx = spec.max_jitter_frac() * static_cast<double>(W);
    const double jy = spec.max_jitter_frac() * static_cast<double>(H);
    const double theta = spec.max_rotation_deg() * u_rot * std::numbers::pi / 180.0;
    const double cx = 0.5 * w, cy = 0.5 * h, ct = std::cos(theta), st = std::sin(theta);
    const std::array<Point, 4> src{Point{0, 0}, Point{w, 0}, Point{w, h}, Point{0, h}};
    std::array<Point, 4> dst{};
    for (int k = 0; k < 4; ++k) {
      const double px = src[k].x + jx * u_jit[2 * k] - cx;
      const double py = src[k].y + jy * u_jit[2 * k + 1] - cy;
      dst[k] = {cx + ct * px - st * py, cy + st * px + ct * py};
    }
    if (!is_degenerate(dst)) {
      const Homography out_to_src = solve_homography(dst, src);
      Tensor warped({H, W, C});
      for (std::size_t v = 0; v < H; ++v)
        for (std::size_t u = 0; u < W; ++u) {
          const Point s = apply(out_to_src, {static_cast<double>(u), static_cast<double>(v)});
          if (std::isfinite(s.x) && std::isfinite(s.y)) sample_clamped(out, s.x, s.y, &warped.at(v, u, 0));
        }
      out = std::move(warped);
    }
  }

  out = box_blur(out, std::lround(spec.max_blur_radius() * u_blur));

  const double sigma = spec.max_noise_sigma() * u_noise;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double n = rng.normal();
    out[i] = std::clamp(static_cast<float>(out[i] + sigma * n), 0.0f, 1.0f);
  }
  return out;
}

WordCrop render_word(std::u32string_view text, Orientation o, const GlyphAtlas& glyphs, Rng& rng,
                     const AugmentSpec& spec) {
  check(!text.empty(), ErrorCode::kInvalidArgument, "render_word: empty text");
  for (char32_t ch : text)
    check(glyphs.contains(ch), ErrorCode::kUnknownCharacter,
          "render_word: no glyph for '" + utf8_encode(std::u32string(1, ch)) + "'");

  const auto scale = static_cast<std::size_t>(rng.between(2, 3));
  const auto [H, W] = word_canvas(text.size(), o, glyphs, scale);
  const std::size_t margin = 2 * scale;

  // Clean contrast in [0.6, 1]; the background level is drawn from the range
  // that keeps both text and background inside [0, 1] after the gradient and tint.
  const double contrast = 0.6 + 0.4 * rng.uniform();
  const bool dark_text = rng.bernoulli(0.5);
  const bool gradient = rng.bernoulli(0.5);
  const double u_amp = rng.uniform();
  const double amp = gradient ? 0.2 * u_amp : 0.0;
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::array<double, 3> tint{};
  for (auto& t : tint) t = rng.uniform(-0.05, 0.05);
  const double slack = std::max(0.0, 1.0 - contrast - amp - 0.1);
  const double base = rng.uniform() * slack;
  const double bg_lvl = dark_text ? 1.0 - 0.5 * amp - 0.05 - base : 0.5 * amp + 0.05 + base;
  const double fg_lvl = dark_text ? bg_lvl - contrast : bg_lvl + contrast;

  Tensor ink({H, W, 1});
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph& g = glyphs.get(text[i]);
    std::size_t x0 = margin, y0 = margin;
    if (o == Orientation::kHorizontal)
      x0 += i * (glyphs.max_width() + 1) * scale;
    else
      y0 += i * (glyphs.max_height() + 1) * scale;
    x0 += (glyphs.max_width() - g.width) / 2 * scale;
    y0 += (glyphs.max_height() - g.height) * scale;
    for (std::size_t r = 0; r < g.height * scale; ++r)
      for (std::size_t c = 0; c < g.width * scale; ++c)
        if (g.at(r / scale, c / scale)) ink.at(y0 + r, x0 + c, 0) = 1.0f;
  }

  const double dx = std::cos(angle), dy = std::sin(angle);
  Tensor img({H, W, 3});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const double ramp = amp * ((dx * static_cast<double>(x) / static_cast<double>(W) +
                                  dy * static_cast<double>(y) / static_cast<double>(H)) * 0.25);
      const double a = ink.at(y, x, 0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (1 - a) * bg_lvl + a * fg_lvl + ramp + tint[c];
        img.at(y, x, c) = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
      }
    }

  return WordCrop{augment(img, spec, rng), std::u32string(text), o};
}

std::size_t DatasetManifest::vertical_count() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ManifestRow& r) {
    return r.orientation == Orientation::kVertical;
  }));
}

std::string encode_manifest(const DatasetManifest& m) {
  std::string out;
  for (const auto& r : m.rows) {
    out += r.path;
    out += '\t';
    out += utf8_encode(r.text);
    out += '\t';
    out += orientation_flag(r.orientation);
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& text, const std::string& source) {
  DatasetManifest m;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    check(cols.size() == 3, ErrorCode::kMalformedRow,
          where + "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    check(!cols[0].empty(), ErrorCode::kMalformedRow, where + "empty image path");
    check(cols[2] == "h" || cols[2] == "v", ErrorCode::kMalformedRow, where + "orientation must be h or v");
    check(seen.insert(cols[0]).second, ErrorCode::kMalformedRow, where + "duplicate path " + cols[0]);
    std::u32string label;
    try {
      label = utf8_decode(cols[1]);
    } catch (const Error& e) {
      fail(ErrorCode::kMalformedRow, where + e.what());
    }
    check(!label.empty(), ErrorCode::kMalformedRow, where + "empty label");
    m.rows.push_back({cols[0], std::move(label), cols[2] == "v" ? Orientation::kVertical : Orientation::kHorizontal});
  }
  return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "labels.tsv";
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.string());
}

DatasetManifest generate_dataset(const fs::path& dir, const DatasetOptions& opt, const GlyphAtlas& glyphs) {
  check(opt.count >= 1, ErrorCode::kInvalidArgument, "dataset count must be at least 1");
  check(opt.vertical_fraction >= 0.0 && opt.vertical_fraction <= 1.0, ErrorCode::kInvalidArgument,
        "vertical fraction must lie in [0, 1]");
  check(opt.len_min >= 1 && opt.len_min <= opt.len_max, ErrorCode::kInvalidArgument,
        "word length range must satisfy 1 <= min <= max");
  check(opt.augment.level >= 0.0 && opt.augment.level <= 1.0, ErrorCode::kInvalidArgument,
        "augment level must lie in [0, 1]");
  const std::u32string charset = opt.charset.empty() ? glyphs.charset() : opt.charset;
  check(!charset.empty(), ErrorCode::kEmptyCharset, "charset is empty");
  for (char32_t ch : charset)
    check(glyphs.contains(ch), ErrorCode::kUnknownCharacter,
          "no glyph for charset character '" + utf8_encode(std::u32string(1, ch)) + "'");

  const auto n_vertical = static_cast<std::size_t>(std::llround(static_cast<double>(opt.count) * opt.vertical_fraction));
  check(n_vertical == 0 || opt.len_max >= 2, ErrorCode::kInvalidArgument,
        "vertical words need a maximum length of at least 2");

  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  check(!ec, ErrorCode::kIo, "cannot create " + (dir / "images").string() + ": " + ec.message());

  std::vector<std::size_t> order(opt.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng perm_rng(opt.seed);
  for (std::size_t i = opt.count; i > 1; --i) std::swap(order[i - 1], order[perm_rng.below(i)]);
  std::vector<bool> vertical(opt.count, false);
  for (std::size_t i = 0; i < n_vertical; ++i) vertical[order[i]] = true;

  DatasetManifest manifest;
  manifest.rows.reserve(opt.count);
  for (std::size_t i = 0; i < opt.count; ++i) {
    Rng rng(opt.seed ^ static_cast<std::uint64_t>(i));
    const Orientation o = vertical[i] ? Orientation::kVertical : Orientation::kHorizontal;
    const std::size_t lo = o == Orientation::kVertical ? std::max<std::size_t>(2, opt.len_min) : opt.len_min;
    const auto len = static_cast<std::size_t>(rng.between(static_cast<long>(lo), static_cast<long>(opt.len_max)));
    std::u32string text;
    for (std::size_t k = 0; k < len; ++k) text.push_back(charset[rng.below(charset.size())]);
    const AugmentSpec spec{opt.augment.level * rng.uniform()};
    const WordCrop crop = render_word(text, o, glyphs, rng, spec);

    char id[32];
    std::snprintf(id, sizeof id, "images/%06zu.ppm", i);
    write_ppm(crop.image, dir / id);
    manifest.rows.push_back({id, std::move(text), o});
  }

  const fs::path path = dir / "labels.tsv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << encode_manifest(manifest);
  check(static_cast<bool>(out.flush()), ErrorCode::kIo, "failed writing " + path.string());
  return manifest;
}

std::vector<WordCrop> read_dataset(const fs::path& dir, std::u32string_view charset) {
  const DatasetManifest m = read_manifest(dir);
  const std::string source = (dir / "labels.tsv").string();
  std::vector<WordCrop> crops;
  crops.reserve(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& row = m.rows[i];
    if (!charset.empty()) {
      for (char32_t ch : row.text)
        check(charset.find(ch) != std::u32string_view::npos, ErrorCode::kOutOfCharset,
              source + " row " + std::to_string(i + 1) + ": label character '" +
                  utf8_encode(std::u32string(1, ch)) + "' is not in the charset");
    }
    const fs::path img_path = dir / row.path;
    check(fs::exists(img_path), ErrorCode::kMissingFile,
          source + " row " + std::to_string(i + 1) + ": missing image " + img_path.string());
    crops.push_back({read_ppm(img_path), row.text, row.orientation});
  }
  return crops;
}

}  // namespace stride
