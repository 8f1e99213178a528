// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/errors.hpp"

namespace stride {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNoAlignment: return "no alignment";
    case ErrorCode::kGuardExceeded: return "guard exceeded";
    case ErrorCode::kDegenerateQuad: return "degenerate quad";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kUnknownVersion: return "unknown version";
    case ErrorCode::kTruncatedPayload: return "truncated payload";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kMalformedRow: return "malformed row";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kOutOfCharset: return "out-of-charset label";
    case ErrorCode::kUnknownCharacter: return "unknown character";
    case ErrorCode::kEmptyCharset: return "empty charset";
    case ErrorCode::kNumeric: return "numeric failure";
  }
  return "error";
}

}  // namespace stride
