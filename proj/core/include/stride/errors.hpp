// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stride {

enum class ErrorCode {
  kShape,
  kInvalidArgument,
  kNoAlignment,
  kGuardExceeded,
  kDegenerateQuad,
  kIo,
  kBadMagic,
  kUnknownVersion,
  kTruncatedPayload,
  kShapeMismatch,
  kMalformedRow,
  kMissingFile,
  kOutOfCharset,
  kUnknownCharacter,
  kEmptyCharset,
  kNumeric,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void check(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace stride
