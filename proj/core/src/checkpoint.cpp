// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace stride {

namespace {

constexpr std::string_view kMagicPrefix = "STRIDE";
constexpr std::string_view kVersion = "01";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  check(!s.empty() && s.find_first_not_of("0123456789") == std::string::npos, ErrorCode::kShapeMismatch,
        "bad integer '" + s + "' for " + what);
  return std::stoull(s);
}

}  // namespace

std::string serialize_config(const ModelConfig& c) {
  std::ostringstream os;
  os << "config\tcharset=";
  for (std::size_t i = 0; i < c.charset.size(); ++i) os << (i ? "," : "") << static_cast<std::uint32_t>(c.charset[i]);
  os << "\tc1=" << c.c1 << "\tc2=" << c.c2 << "\tc3=" << c.c3 << "\tc4=" << c.c4 << "\thidden=" << c.lstm_hidden
     << "\tprojection=" << c.projection << "\tcbam_reduction=" << c.cbam_reduction
     << "\tgse_reduction=" << c.gse_reduction << "\tsam_kernel=" << c.sam_kernel
     << "\tattention=" << to_string(c.attention) << "\theight=" << c.input_height;
  return os.str();
}

ModelConfig parse_config(const std::string& line) {
  auto fields = split(line, '\t');
  check(!fields.empty() && fields[0] == "config", ErrorCode::kShapeMismatch, "missing config line");
  ModelConfig c;
  std::map<std::string, std::size_t*> sizes{{"c1", &c.c1},
                                            {"c2", &c.c2},
                                            {"c3", &c.c3},
                                            {"c4", &c.c4},
                                            {"hidden", &c.lstm_hidden},
                                            {"projection", &c.projection},
                                            {"cbam_reduction", &c.cbam_reduction},
                                            {"gse_reduction", &c.gse_reduction},
                                            {"sam_kernel", &c.sam_kernel},
                                            {"height", &c.input_height}};
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    check(eq != std::string::npos, ErrorCode::kShapeMismatch, "bad config field '" + fields[i] + "'");
    const std::string key = fields[i].substr(0, eq), value = fields[i].substr(eq + 1);
    if (key == "charset") {
      c.charset.clear();
      if (!value.empty())
        for (const auto& cp : split(value, ',')) c.charset.push_back(static_cast<char32_t>(parse_size(cp, "charset")));
    } else if (key == "attention") {
      c.attention = parse_attention(value);
    } else if (auto it = sizes.find(key); it != sizes.end()) {
      *it->second = parse_size(value, key);
    } else {
      fail(ErrorCode::kShapeMismatch, "unknown config key '" + key + "'");
    }
  }
  return c;
}

std::string encode_checkpoint(const ModelParams<float>& params, const ModelConfig& config) {
  std::ostringstream header;
  std::string payload;
  params.for_each([&](std::string_view name, const Tensor& t) {
    header << name << "\tf32\t";
    for (std::size_t i = 0; i < t.rank(); ++i) header << (i ? "," : "") << t.dim(i);
    header << "\t" << payload.size() << "\n";
    payload.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  });
  header << serialize_config(config) << "\n";

  const std::string h = header.str();
  const auto len = static_cast<std::uint32_t>(h.size());
  std::string out;
  out.append(kMagicPrefix);
  out.append(kVersion);
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out += h;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  check(bytes.size() >= 8 && bytes.compare(0, kMagicPrefix.size(), kMagicPrefix) == 0, ErrorCode::kBadMagic,
        "not a STRIDE checkpoint");
  check(bytes.compare(6, 2, kVersion) == 0, ErrorCode::kUnknownVersion,
        "unsupported checkpoint version '" + bytes.substr(6, 2) + "'");
  check(bytes.size() >= 12, ErrorCode::kTruncatedPayload, "file ends inside the header length");
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 8, sizeof(len));
  check(bytes.size() >= 12 + static_cast<std::size_t>(len), ErrorCode::kTruncatedPayload, "file ends inside the header");
  const std::string header = bytes.substr(12, len);
  const std::size_t payload_begin = 12 + len;
  const std::size_t payload_size = bytes.size() - payload_begin;

  struct Entry {
    Shape shape;
    std::size_t offset;
  };
  std::map<std::string, Entry> entries;
  std::string config_line;
  for (const auto& line : split(header, '\n')) {
    if (line.empty()) continue;
    if (line.starts_with("config\t")) {
      config_line = line;
      continue;
    }
    auto f = split(line, '\t');
    check(f.size() == 4, ErrorCode::kShapeMismatch, "malformed header line '" + line + "'");
    check(f[1] == "f32", ErrorCode::kShapeMismatch, "unsupported dtype '" + f[1] + "'");
    Entry e{{}, parse_size(f[3], f[0] + " offset")};
    for (const auto& d : split(f[2], ',')) e.shape.push_back(parse_size(d, f[0] + " shape"));
    check(e.offset + shape_numel(e.shape) * sizeof(float) <= payload_size, ErrorCode::kTruncatedPayload,
          "tensor " + f[0] + " extends past the end of the payload");
    entries[f[0]] = std::move(e);
  }

  Checkpoint ck{parse_config(config_line), {}};
  try {
    ck.params = make_params<float>(ck.config);
  } catch (const Error& e) {
    fail(ErrorCode::kShapeMismatch, std::string("checkpoint config is invalid: ") + e.what());
  }
  std::size_t seen = 0;
  ck.params.for_each([&](std::string_view name, Tensor& t) {
    auto it = entries.find(std::string(name));
    check(it != entries.end(), ErrorCode::kShapeMismatch, "tensor " + std::string(name) + " missing from checkpoint");
    check(it->second.shape == t.shape(), ErrorCode::kShapeMismatch,
          "tensor " + std::string(name) + " has shape " + shape_str(it->second.shape) + ", config implies " +
              shape_str(t.shape()));
    std::memcpy(t.data(), bytes.data() + payload_begin + it->second.offset, t.size() * sizeof(float));
    ++seen;
  });
  check(seen == entries.size(), ErrorCode::kShapeMismatch, "checkpoint holds tensors the config does not define");
  return ck;
}

void save_checkpoint(const ModelParams<float>& params, const ModelConfig& config, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace stride
