// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "stride/ctc.hpp"

namespace stride {

std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

/// 236 Latin code points: printable ASCII, Latin-1 Supplement and the head of
/// Latin Extended-A.
std::u32string latin_charset();

/// Maps each character to its charset index; kOutOfCharset names the first miss.
LabelSequence encode_labels(std::u32string_view text, std::u32string_view charset);

}  // namespace stride
