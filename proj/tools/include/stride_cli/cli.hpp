// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stride::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumericFailure = 3 };

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Reads `key=value` lines ('#' comments and blank lines ignored) into
/// `--key=value` tokens.
std::vector<std::string> read_config_tokens(const std::string& path);

}  // namespace stride::cli
