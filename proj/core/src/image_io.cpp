// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace stride {

std::string encode_ppm(const Tensor& img) {
  check(img.rank() == 3 && img.dim(2) == 3, ErrorCode::kShape, "PPM needs an H x W x 3 image");
  std::string out = "P6\n" + std::to_string(img.dim(1)) + " " + std::to_string(img.dim(0)) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img[i], 0.0f, 1.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
  }
  return out;
}

Tensor decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) t.push_back(bytes[pos++]);
    return t;
  };
  check(token() == "P6", ErrorCode::kBadMagic, "not a binary PPM (P6) image");
  const std::string ws = token(), hs = token(), ms = token();
  const bool numeric = !ws.empty() && !hs.empty() && ms == "255" &&
                       ws.find_first_not_of("0123456789") == std::string::npos &&
                       hs.find_first_not_of("0123456789") == std::string::npos;
  check(numeric, ErrorCode::kBadMagic, "unsupported PPM header");
  ++pos;  // single whitespace byte before the raster
  const std::size_t W = std::stoull(ws), H = std::stoull(hs);
  check(W > 0 && H > 0 && bytes.size() >= pos + W * H * 3, ErrorCode::kTruncatedPayload, "PPM raster is truncated");
  Tensor img({H, W, 3});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / 255.0f;
  return img;
}

void write_ppm(const Tensor& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot open " + path.string());
  return decode_ppm(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

}  // namespace stride
