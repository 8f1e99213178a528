// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stride/glyphs.hpp"
#include "stride/rng.hpp"
#include "stride/tensor.hpp"

namespace stride {

enum class Orientation : int { kHorizontal = 0, kVertical = 1 };

char orientation_flag(Orientation o);

struct WordCrop {
  Tensor image;  // H x W x 3, values in [0, 1]
  std::u32string text;
  Orientation orientation = Orientation::kHorizontal;
};

/// Augmentation strength. Every range below scales linearly with `level`:
/// rotation up to level*15 degrees, corner jitter up to level*10% of the crop
/// size, box blur radius up to level*2 px, contrast reduction up to level*40%
/// of the clean contrast (which starts at >= 0.6), noise sigma up to level*0.05.
struct AugmentSpec {
  double level = 0.0;

  double max_rotation_deg() const { return level * 15.0; }
  double max_jitter_frac() const { return level * 0.10; }
  double max_blur_radius() const { return level * 2.0; }
  double max_contrast_drop() const { return level * 0.4; }
  double max_noise_sigma() const { return level * 0.05; }
};

/// Pixel size of the unaugmented canvas for `length` glyphs at `scale`.
/// Returns {height, width}.
std::pair<std::size_t, std::size_t> word_canvas(std::size_t length, Orientation o, const GlyphAtlas& glyphs,
                                                std::size_t scale);

/// Applies contrast reduction, rotation, perspective jitter, blur and noise.
/// The number of random draws depends only on the image size, so two calls
/// with equal seeds and different levels share the same underlying draws.
Tensor augment(const Tensor& img, const AugmentSpec& spec, Rng& rng);

WordCrop render_word(std::u32string_view text, Orientation o, const GlyphAtlas& glyphs, Rng& rng,
                     const AugmentSpec& spec);

struct ManifestRow {
  std::string path;  // relative to the dataset directory
  std::u32string text;
  Orientation orientation = Orientation::kHorizontal;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;

  std::size_t vertical_count() const;
};

std::string encode_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(const std::string& text, const std::string& source = "labels.tsv");
DatasetManifest read_manifest(const std::filesystem::path& dir);

struct DatasetOptions {
  std::size_t count = 1000;
  double vertical_fraction = 1.0 / 6.0;
  std::size_t len_min = 1;
  std::size_t len_max = 8;
  /// Each crop draws its own level uniformly from [0, augment.level].
  AugmentSpec augment;
  std::uint64_t seed = 0;
  /// Characters to draw from; empty means every glyph in the atlas.
  std::u32string charset;
};

/// Writes `<dir>/images/<id>.ppm` and `<dir>/labels.tsv`. Exactly
/// round(count * vertical_fraction) crops are vertical; vertical words have
/// at least two characters. Sample i uses its own stream seeded by seed ^ i.
DatasetManifest generate_dataset(const std::filesystem::path& dir, const DatasetOptions& options,
                                 const GlyphAtlas& glyphs);

/// Loads every crop listed in the manifest. When `charset` is non-empty each
/// label must be drawn from it.
std::vector<WordCrop> read_dataset(const std::filesystem::path& dir, std::u32string_view charset = {});

}  // namespace stride
