// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "stride_cli/cli.hpp"

int main(int argc, char** argv) { return stride::cli::run(argc, argv, std::cout, std::cerr); }
