// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/glyphs.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stride/errors.hpp"
#include "stride/image_io.hpp"

namespace stride {

namespace {

struct FontRow {
  char32_t code;
  const char* rows[7];
};

// clang-format off
constexpr FontRow kFont5x7[] = {
  {U'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
  {U'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
  {U'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
  {U'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
  {U'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
  {U'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
  {U'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
  {U'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
  {U'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
  {U'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
  {U'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {U'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
  {U'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
  {U'D', {"###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."}},
  {U'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
  {U'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
  {U'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
  {U'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {U'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
  {U'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
  {U'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
  {U'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
  {U'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
  {U'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
  {U'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {U'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
  {U'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
  {U'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
  {U'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
  {U'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
  {U'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {U'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
  {U'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
  {U'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
  {U'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
  {U'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
  {U'a', {".....", ".....", ".###.", "....#", ".####", "#...#", ".####"}},
  {U'b', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."}},
  {U'c', {".....", ".....", ".###.", "#....", "#....", "#...#", ".###."}},
  {U'd', {"....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"}},
  {U'e', {".....", ".....", ".###.", "#...#", "#####", "#....", ".###."}},
  {U'f', {"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."}},
  {U'g', {".....", ".####", "#...#", "#...#", ".####", "....#", ".###."}},
  {U'h', {"#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"}},
  {U'i', {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."}},
  {U'j', {"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."}},
  {U'k', {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."}},
  {U'l', {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
  {U'm', {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"}},
  {U'n', {".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"}},
  {U'o', {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."}},
  {U'p', {".....", ".....", "####.", "#...#", "####.", "#....", "#...."}},
  {U'q', {".....", ".....", ".##.#", "#..##", ".####", "....#", "....#"}},
  {U'r', {".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."}},
  {U's', {".....", ".....", ".###.", "#....", ".###.", "....#", "####."}},
  {U't', {".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."}},
  {U'u', {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"}},
  {U'v', {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
  {U'w', {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."}},
  {U'x', {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"}},
  {U'y', {".....", ".....", "#...#", "#...#", ".####", "....#", ".###."}},
  {U'z', {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"}},
};
// clang-format on

}  // namespace

GlyphAtlas GlyphAtlas::builtin() {
  GlyphAtlas atlas;
  for (const auto& f : kFont5x7) {
    Glyph g{5, 7, std::vector<std::uint8_t>(35)};
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 5; ++c) g.ink[r * 5 + c] = f.rows[r][c] == '#';
    atlas.add(f.code, std::move(g));
  }
  return atlas;
}

GlyphAtlas GlyphAtlas::load(const std::filesystem::path& stem) {
  auto img_path = stem;
  img_path += ".ppm";
  auto tsv_path = stem;
  tsv_path += ".tsv";
  const auto img = read_ppm(img_path);
  std::ifstream in(tsv_path);
  check(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot open " + tsv_path.string());

  GlyphAtlas atlas;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string code;
    unsigned long cp = 0;
    std::size_t x = 0, y = 0, w = 0, h = 0;
    bool ok = static_cast<bool>(ls >> code >> x >> y >> w >> h);
    if (ok) {
      try {
        cp = code.rfind("U+", 0) == 0 ? std::stoul(code.substr(2), nullptr, 16) : std::stoul(code);
      } catch (const std::exception&) {
        ok = false;
      }
    }
    check(ok && w > 0 && h > 0 && x + w <= img.dim(1) &&
              y + h <= img.dim(0),
          ErrorCode::kMalformedRow, tsv_path.string() + ":" + std::to_string(lineno) + ": bad glyph metrics");
    Glyph g{w, h, std::vector<std::uint8_t>(w * h)};
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const float lum = (img.at(y + r, x + c, 0) + img.at(y + r, x + c, 1) + img.at(y + r, x + c, 2)) / 3.0f;
        g.ink[r * w + c] = lum < 0.5f;
      }
    atlas.add(static_cast<char32_t>(cp), std::move(g));
  }
  check(atlas.max_w_ > 0, ErrorCode::kEmptyCharset, "glyph atlas " + tsv_path.string() + " is empty");
  return atlas;
}

void GlyphAtlas::add(char32_t c, Glyph g) {
  max_w_ = std::max(max_w_, g.width);
  max_h_ = std::max(max_h_, g.height);
  glyphs_[c] = std::move(g);
}

const Glyph& GlyphAtlas::get(char32_t c) const {
  auto it = glyphs_.find(c);
  check(it != glyphs_.end(), ErrorCode::kUnknownCharacter, "no glyph for U+" + std::to_string(static_cast<unsigned long>(c)));
  return it->second;
}

std::u32string GlyphAtlas::charset() const {
  std::u32string out;
  for (const auto& [c, g] : glyphs_) out.push_back(c);
  return out;
}

}  // namespace stride
