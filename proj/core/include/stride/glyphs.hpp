// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stride {

struct Glyph {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> ink;  // row-major, 1 = foreground

  bool at(std::size_t r, std::size_t c) const { return ink[r * width + c] != 0; }
};

class GlyphAtlas {
 public:
  /// Built-in 5x7 bitmap font covering 0-9, A-Z and a-z.
  static GlyphAtlas builtin();

  /// External atlas: `<stem>.ppm` holds dark glyphs on a light background and
  /// `<stem>.tsv` has rows "U+XXXX<TAB>x<TAB>y<TAB>w<TAB>h"; a bare decimal code point is
  /// also accepted.
  static GlyphAtlas load(const std::filesystem::path& stem);

  void add(char32_t c, Glyph g);
  bool contains(char32_t c) const { return glyphs_.count(c) != 0; }
  const Glyph& get(char32_t c) const;
  std::u32string charset() const;
  std::size_t max_width() const { return max_w_; }
  std::size_t max_height() const { return max_h_; }

 private:
  std::map<char32_t, Glyph> glyphs_;
  std::size_t max_w_ = 0, max_h_ = 0;
};

}  // namespace stride
