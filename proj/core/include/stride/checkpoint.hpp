// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout (little-endian):
//   "STRIDE01"                  8-byte magic, last two bytes are the version
//   u32                         header byte length
//   header                      UTF-8 lines "name\tf32\td0,d1,...\toffset" and
//                               one "config\tkey=value\t..." line
//   payload                     raw f32 tensors at the stated offsets, relative
//                               to the first payload byte

#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include "stride/model.hpp"

namespace stride {

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
};

std::string serialize_config(const ModelConfig& config);
ModelConfig parse_config(const std::string& line);

std::string encode_checkpoint(const ModelParams<float>& params, const ModelConfig& config);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ModelParams<float>& params, const ModelConfig& config, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stride
