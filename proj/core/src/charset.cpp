// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/charset.hpp"

namespace stride {

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  for (std::size_t i = 0; i < text.size();) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      fail(ErrorCode::kInvalidArgument, "invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    check(i + len <= text.size(), ErrorCode::kInvalidArgument, "truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      check((b & 0xC0) == 0x80, ErrorCode::kInvalidArgument, "invalid UTF-8 continuation byte");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::u32string latin_charset() {
  std::u32string cs;
  for (char32_t c = 0x21; c <= 0x7E; ++c) cs.push_back(c);    // 94
  for (char32_t c = 0xA1; c <= 0xFF; ++c) {                    // 94 (skip soft hyphen)
    if (c != 0xAD) cs.push_back(c);
  }
  for (char32_t c = 0x100; cs.size() < 236; ++c) cs.push_back(c);  // 48 from Latin Extended-A
  return cs;
}

LabelSequence encode_labels(std::u32string_view text, std::u32string_view charset) {
  LabelSequence out;
  out.reserve(text.size());
  for (char32_t c : text) {
    const auto pos = charset.find(c);
    check(pos != std::u32string_view::npos, ErrorCode::kOutOfCharset,
          "character '" + utf8_encode(std::u32string(1, c)) + "' is not in the charset");
    out.push_back(static_cast<int>(pos));
  }
  return out;
}

}  // namespace stride
