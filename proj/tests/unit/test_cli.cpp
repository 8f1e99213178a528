// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stride/charset.hpp"
#include "stride/checkpoint.hpp"
#include "stride/datagen.hpp"
#include "stride/image_io.hpp"
#include "stride/trainer.hpp"
#include "stride_cli/cli.hpp"
#include "test_util.hpp"

namespace stride {
namespace {

namespace fs = std::filesystem;
using test::temp_dir;

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Value of a "key value" line in command output; tabs or aligned spaces.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key, 0) != 0 || line.size() == key.size()) continue;
    if (line[key.size()] != '\t' && line[key.size()] != ' ') continue;
    return line.substr(line.find_first_not_of(" \t", key.size()));
  }
  return {};
}

TEST(CliSynth, HorizontalOnly) {
  const auto dir = temp_dir("cli_h") / "d";
  const CliResult r = cli({"synth", "--out", dir.string(), "--count", "100", "--vertical-frac", "0", "--seed", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(field(r.out, "crops"), "100");
  EXPECT_EQ(field(r.out, "vertical"), "0");
  const DatasetManifest m = read_manifest(dir);
  EXPECT_EQ(m.rows.size(), 100u);
  for (const auto& row : m.rows) EXPECT_EQ(row.orientation, Orientation::kHorizontal);
}

TEST(CliSynth, SameSeedSameBytes) {
  const auto root = temp_dir("cli_seed");
  for (const char* name : {"a", "b"})
    ASSERT_EQ(cli({"synth", "--out", (root / name).string(), "--count", "30", "--augment", "0.5", "--seed", "9"}).code,
              cli::kOk);
  EXPECT_EQ(slurp(root / "a" / "labels.tsv"), slurp(root / "b" / "labels.tsv"));
  for (const char* img : {"000000.ppm", "000017.ppm", "000029.ppm"})
    EXPECT_EQ(slurp(root / "a" / "images" / img), slurp(root / "b" / "images" / img));
}

TEST(CliSynth, FiveToOneRatio) {
  const auto dir = temp_dir("cli_ratio") / "d";
  const CliResult r = cli({"synth", "--out", dir.string(), "--count", "6000", "--vertical-frac", "0.167", "--len-max", "4",
                     "--seed", "4"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const int vertical = std::stoi(field(r.out, "vertical"));
  EXPECT_NEAR(vertical, 1000, 20);
  EXPECT_EQ(read_manifest(dir).vertical_count(), static_cast<std::size_t>(vertical));
}

TEST(CliParams, AttentionDeltaIsCbamParameters) {
  const CliResult none = cli({"params", "--preset", "latin", "--attention", "none"});
  const CliResult cbam = cli({"params", "--preset", "latin", "--attention", "cbam2"});
  ASSERT_EQ(none.code, cli::kOk);
  ASSERT_EQ(cbam.code, cli::kOk);
  const long a = std::stol(none.out), b = std::stol(cbam.out);
  EXPECT_EQ(b, static_cast<long>(param_count(latin_config())));
  // CAM perceptrons 48->6->48 and 116->14->116, SAM kernels 3x3x2+1 and 1x1x2+1.
  EXPECT_EQ(b - a, (48 * 6 + 6 + 6 * 48 + 48) + (116 * 14 + 14 + 14 * 116 + 116) + 19 + 3);
  const CliResult toy = cli({"params", "--preset", "toy", "--charset", "0123456789"});
  EXPECT_EQ(std::stol(toy.out), 91300);
}

TEST(CliUsage, UnknownFlagAndBadValues) {
  const auto root = temp_dir("cli_usage");
  EXPECT_EQ(cli({"params", "--bogus"}).code, cli::kUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(cli({}).code, cli::kUsage);
  EXPECT_EQ(cli({"synth", "--out", (root / "x").string(), "--count", "0"}).code, cli::kUsage);
  EXPECT_EQ(cli({"synth", "--out", (root / "y").string(), "--vertical-frac", "1.5"}).code, cli::kUsage);
  EXPECT_EQ(cli({"synth", "--out", (root / "z").string(), "--charset", "a#"}).code, cli::kUsage);
  EXPECT_EQ(cli({"synth", "--out", (root / "w").string(), "--len-min", "4", "--len-max", "2"}).code, cli::kUsage);
  EXPECT_EQ(cli({"train", "--data", "d", "--val", "d", "--out", (root / "m.ckpt").string(), "--attention", "se"}).code,
            cli::kUsage);
  for (const char* name : {"x", "y", "z", "w", "m.ckpt", "m.ckpt.log"}) EXPECT_FALSE(fs::exists(root / name)) << name;
}

TEST(CliUsage, DataErrorsExitTwo) {
  const auto root = temp_dir("cli_data");
  EXPECT_EQ(cli({"eval", "--model", (root / "none.ckpt").string(), "--data", root.string()}).code, cli::kData);
  std::ofstream(root / "junk.ckpt") << "not a checkpoint";
  EXPECT_EQ(cli({"infer", "--model", (root / "junk.ckpt").string(), "--image", "x.ppm"}).code, cli::kData);
  EXPECT_EQ(cli({"train", "--data", (root / "a").string(), "--val", (root / "b").string(), "--out",
                 (root / "m.ckpt").string()})
                .code,
            cli::kData);
}

TEST(CliConfig, FlagBeatsFileBeatsDefault) {
  const auto root = temp_dir("cli_config");
  std::ofstream(root / "synth.cfg") << "# dataset size\ncount=5\nvertical-frac=0\n";
  const CliResult file = cli({"synth", "--config", (root / "synth.cfg").string(), "--out", (root / "a").string()});
  ASSERT_EQ(file.code, cli::kOk) << file.err;
  EXPECT_EQ(field(file.out, "crops"), "5");
  const CliResult flag =
      cli({"synth", "--config", (root / "synth.cfg").string(), "--out", (root / "b").string(), "--count", "7"});
  EXPECT_EQ(field(flag.out, "crops"), "7");
  EXPECT_EQ(field(flag.out, "vertical"), "0");
  std::ofstream(root / "bad.cfg") << "count\n";
  EXPECT_EQ(cli({"synth", "--config", (root / "bad.cfg").string(), "--out", (root / "c").string()}).code, cli::kData);
  EXPECT_EQ(cli({"synth", "--config", (root / "absent.cfg").string(), "--out", (root / "c").string()}).code,
            cli::kData);
}

TEST(CliGradcheck, Passes) {
  const CliResult r = cli({"gradcheck", "--seed", "1"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_NE(r.out.find("model cbam2"), std::string::npos);
}

TEST(CliBench, PositiveLatency) {
  const CliResult r = cli({"bench", "--width", "64", "--iters", "3", "--warmup", "1"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const double mean = std::stod(field(r.out, "mean_ms")), median = std::stod(field(r.out, "median_ms"));
  EXPECT_TRUE(std::isfinite(mean) && mean > 0);
  EXPECT_TRUE(std::isfinite(median) && median > 0);
  EXPECT_EQ(field(r.out, "width"), "64");
  EXPECT_EQ(cli({"bench", "--width", "7"}).code, cli::kUsage);
}

// Shared small dataset and a checkpoint that has memorised it.
class CliTrained : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(temp_dir("cli_trained"));
    ASSERT_EQ(cli({"synth", "--out", (*root_ / "d").string(), "--count", "48", "--charset", "01", "--len-max", "2",
                   "--vertical-frac", "0.25", "--seed", "1"})
                  .code,
              cli::kOk);
    log_ = new CliResult(cli({"train", "--data", (*root_ / "d").string(), "--val", (*root_ / "d").string(), "--out",
                        (*root_ / "m.ckpt").string(), "--preset", "toy", "--epochs", "40", "--batch", "8", "--lr",
                        "3e-3", "--lr-floor", "1e-9", "--no-curriculum", "--no-weak-supervision", "--aug-max", "0"}));
  }
  static void TearDownTestSuite() {
    delete root_;
    delete log_;
  }
  static fs::path* root_;
  static CliResult* log_;
};
fs::path* CliTrained::root_ = nullptr;
CliResult* CliTrained::log_ = nullptr;

TEST_F(CliTrained, WritesCheckpointAndLog) {
  ASSERT_EQ(log_->code, cli::kOk) << log_->err;
  EXPECT_EQ(field(log_->out, "checkpoint"), (*root_ / "m.ckpt").string());
  auto log_path = *root_ / "m.ckpt";
  log_path += ".log";
  const std::string file_log = slurp(log_path);
  EXPECT_EQ(file_log.substr(0, file_log.find('\n')), log_header());
  EXPECT_EQ(load_checkpoint(*root_ / "m.ckpt").config.charset, U"01");
}

TEST_F(CliTrained, InferReadsCleanCropsExactly) {
  const DatasetManifest m = read_manifest(*root_ / "d");
  std::size_t orient_ok = 0;
  for (const auto& row : m.rows) {
    const CliResult r = cli({"infer", "--model", (*root_ / "m.ckpt").string(), "--image", (*root_ / "d" / row.path).string()});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(field(r.out, "text"), utf8_encode(row.text)) << row.path;
    const double vp = std::stod(field(r.out, "vertical_prob"));
    orient_ok += (vp > 0.5) == (row.orientation == Orientation::kVertical);
  }
  EXPECT_GE(orient_ok, m.rows.size() - 2);
}

TEST_F(CliTrained, InferOnSceneWithQuad) {
  const DatasetManifest m = read_manifest(*root_ / "d");
  const auto it = std::find_if(m.rows.begin(), m.rows.end(),
                               [](const auto& r) { return r.orientation == Orientation::kHorizontal; });
  ASSERT_NE(it, m.rows.end());
  const auto& row = *it;
  const Tensor crop = read_ppm(*root_ / "d" / row.path);
  const std::size_t ox = 7, oy = 5;
  Tensor scene({crop.dim(0) + 12, crop.dim(1) + 20, 3}, 0.3f);
  for (std::size_t i = 0; i < crop.dim(0); ++i)
    for (std::size_t j = 0; j < crop.dim(1); ++j)
      for (std::size_t c = 0; c < 3; ++c) scene.at(oy + i, ox + j, c) = crop.at(i, j, c);
  write_ppm(scene, *root_ / "scene.ppm");
  const std::size_t x1 = ox + crop.dim(1) - 1, y1 = oy + crop.dim(0) - 1;
  std::ostringstream quad;
  quad << ox << ',' << oy << ',' << x1 << ',' << oy << ',' << x1 << ',' << y1 << ',' << ox << ',' << y1;
  for (const char* angle : {"0", "40"}) {
    const CliResult r = cli({"infer", "--model", (*root_ / "m.ckpt").string(), "--image", (*root_ / "scene.ppm").string(),
                       "--quad", quad.str(), "--angle", angle});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(field(r.out, "text"), utf8_encode(row.text)) << "angle " << angle;
  }
  EXPECT_EQ(cli({"infer", "--model", (*root_ / "m.ckpt").string(), "--image", (*root_ / "scene.ppm").string(), "--quad",
                 "1,2,3"})
                .code,
            cli::kUsage);
}

TEST_F(CliTrained, EvalFormats) {
  const CliResult tsv = cli({"eval", "--model", (*root_ / "m.ckpt").string(), "--data", (*root_ / "d").string(), "--format",
                       "tsv"});
  ASSERT_EQ(tsv.code, cli::kOk) << tsv.err;
  std::istringstream in(tsv.out);
  std::string header, values;
  std::getline(in, header);
  std::getline(in, values);
  EXPECT_EQ(header, "word_acc\tchar_acc\torient_acc\tloss\tcount");
  EXPECT_EQ(values.substr(0, values.find('\t')), "1.000000");
  EXPECT_EQ(values.substr(values.rfind('\t') + 1), "48");
  const CliResult text = cli({"eval", "--model", (*root_ / "m.ckpt").string(), "--data", (*root_ / "d").string()});
  EXPECT_EQ(field(text.out, "word accuracy"), "1.0000");
}

TEST_F(CliTrained, DefaultLambdaIsOne) {
  EXPECT_EQ(TrainConfig{}.lambda, 1.0);
  const auto d = (*root_ / "d").string();
  const CliResult implicit = cli({"train", "--data", d, "--val", d, "--out", (*root_ / "i.ckpt").string(), "--preset", "toy",
                            "--epochs", "1", "--batch", "8"});
  const CliResult explicit_one = cli({"train", "--data", d, "--val", d, "--out", (*root_ / "e.ckpt").string(), "--preset",
                                "toy", "--epochs", "1", "--batch", "8", "--lambda", "1"});
  const CliResult zero = cli({"train", "--data", d, "--val", d, "--out", (*root_ / "z.ckpt").string(), "--preset", "toy",
                        "--epochs", "1", "--batch", "8", "--lambda", "0"});
  ASSERT_EQ(implicit.code, cli::kOk) << implicit.err;
  EXPECT_EQ(slurp(*root_ / "i.ckpt"), slurp(*root_ / "e.ckpt"));
  EXPECT_NE(slurp(*root_ / "i.ckpt"), slurp(*root_ / "z.ckpt"));
}

TEST_F(CliTrained, ZeroLambdaLeavesOrientationHeadAtInit) {
  const auto d = (*root_ / "d").string();
  ASSERT_EQ(cli({"train", "--data", d, "--val", d, "--out", (*root_ / "z0.ckpt").string(), "--preset", "toy",
                 "--epochs", "2", "--batch", "8", "--lambda", "0", "--seed", "3"})
                .code,
            cli::kOk);
  const Checkpoint ck = load_checkpoint(*root_ / "z0.ckpt");
  const auto init = init_params<float>(ck.config, 3);
  EXPECT_EQ(ck.params.orient_w, init.orient_w);
  EXPECT_EQ(ck.params.orient_b, init.orient_b);
  EXPECT_NE(ck.params.pred_w, init.pred_w);
}

}  // namespace
}  // namespace stride
