// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stride/charset.hpp"
#include "stride/checkpoint.hpp"
#include "stride/ctc.hpp"
#include "stride/datagen.hpp"
#include "stride/errors.hpp"
#include "stride/glyphs.hpp"
#include "stride/gradcheck.hpp"
#include "stride/model.hpp"
#include "stride/ops.hpp"
#include "stride/rng.hpp"
#include "stride/trainer.hpp"
#include "stride_cli/cli.hpp"

namespace fs = std::filesystem;
using namespace stride;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failing condition; later ones are ignored.
void expect(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kNumeric;  // nothing thrown; never the expected code here
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Reference collapse written independently of the library: drop repeats, then blanks.
LabelSequence reference_collapse(const std::vector<int>& path, int blank) {
  LabelSequence out;
  int prev = -1;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

Outcome ctc_oracle() {
  const auto t0 = Clock::now();
  Outcome o;
  constexpr int kLabels = 2, kClasses = kLabels + 1;
  std::vector<LabelSequence> targets{{}};
  for (std::size_t len = 1; len <= 3; ++len)
    for (int code = 0; code < (1 << len); ++code) {
      LabelSequence t;
      for (std::size_t i = 0; i < len; ++i) t.push_back((code >> (len - 1 - i)) & 1);
      targets.push_back(t);
    }
  Rng rng(2026);
  double worst = 0;
  std::size_t cases = 0, infeasible = 0;
  for (std::size_t steps = 1; steps <= 6; ++steps)
    for (const auto& target : targets)
      for (int draw = 0; draw < 50; ++draw, ++cases) {
        // Random frame distributions with logits spread over [-3, 3].
        TensorD logits({steps, kClasses});
        for (double& v : logits.values()) v = rng.uniform(-3.0, 3.0);
        const TensorD lp = log_softmax_lastdim(logits);
        const double brute = ctc_brute_force(lp, target);
        if (ctc_min_frames(target) > steps) {
          ++infeasible;
          expect(o, brute == 0.0, "brute force mass nonzero for an infeasible target");
          expect(o, code_of([&] { ctc_loss(lp, target, false); }) == ErrorCode::kNoAlignment,
                 "ctc_loss accepted an infeasible target");
          continue;
        }
        const double p = std::exp(-ctc_loss(lp, target, false).loss);
        const double rel = std::abs(p - brute) / std::max(std::abs(brute), 1e-300);
        worst = std::max(worst, rel);
      }
  const double secs = seconds_since(t0);
  expect(o, worst <= 1e-6, "relative error " + fmt("%.3e", worst));
  expect(o, secs <= 60, "took " + fmt("%.1f", secs) + " s");
  if (o.pass)
    o.detail = std::to_string(cases) + " cases (" + std::to_string(infeasible) + " infeasible), max rel err " +
               fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s";
  return o;
}

Outcome gradient_suite() {
  Outcome o;
  const GradCheckReport report = run_gradcheck(GradCheckOptions{});
  std::set<std::string> seen;
  for (const auto& r : report.results) {
    expect(o, r.passed(), r.name + " rel err " + fmt("%.3e", r.max_rel_error));
    expect(o, r.tolerance <= (r.name.rfind("model", 0) == 0 ? 1e-4 : 1e-5), r.name + " tolerance too loose");
    seen.insert(r.name.substr(0, r.name.find(' ')));
  }
  for (const char* required : {"conv2d", "maxpool_h", "avgpool_w", "dense", "sigmoid", "tanh", "relu", "softmax",
                               "log_softmax", "lstm", "gse", "cam", "sam", "cbam", "ctc", "model"})
    expect(o, seen.count(required) == 1, std::string("missing check ") + required);
  expect(o, report.seconds <= 120, "took " + fmt("%.1f", report.seconds) + " s");
  if (o.pass)
    o.detail = std::to_string(report.results.size()) + " checks in " + fmt("%.2f", report.seconds) + " s";
  return o;
}

Outcome parameter_budget() {
  Outcome o;
  const std::size_t cbam = param_count(latin_config(AttentionVariant::kCbam2));
  const std::size_t none = param_count(latin_config(AttentionVariant::kNone));
  expect(o, latin_config().charset.size() == 236, "latin charset size");
  expect(o, cbam >= 800000 && cbam <= 950000, "cbam2 count " + std::to_string(cbam));
  expect(o, cbam > none && cbam - none < 50000, "attention delta " + std::to_string(cbam - none));
  expect(o, init_params<float>(latin_config(), 0).count() == cbam, "materialised count differs");
  if (o.pass)
    o.detail = "cbam2 " + std::to_string(cbam) + ", none " + std::to_string(none) + ", delta " +
               std::to_string(cbam - none);
  return o;
}

Outcome shape_contract() {
  Outcome o;
  const ModelConfig config = latin_config();
  const auto p = init_params<float>(config, 1);
  Rng rng(3);
  Tensor img({16, 64, 3});
  for (float& v : img.values()) v = static_cast<float>(rng.uniform());
  const Features<float> f = extract_features(img, p, config);
  const ForwardOutput<float> out = forward(img, p, config);
  expect(o, f.seq.shape() == std::vector<std::size_t>{32, 164}, "feature sequence " + shape_str(f.seq.shape()));
  expect(o, out.logits.shape() == std::vector<std::size_t>{32, 237}, "logits " + shape_str(out.logits.shape()));
  if (o.pass) o.detail = "features 32x164, logits 32x237";
  return o;
}

Outcome decoding_properties() {
  Outcome o;
  Rng rng(77);
  std::size_t failures = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t K = 2 + rng.below(9), steps = 1 + rng.below(24);
    const int blank = static_cast<int>(K) - 1;
    std::vector<int> path(steps);
    // Bias towards repeats and blanks so both laws are exercised.
    for (std::size_t t = 0; t < steps; ++t) {
      const double u = rng.uniform();
      path[t] = (t > 0 && u < 0.3) ? path[t - 1] : (u < 0.5 ? blank : static_cast<int>(rng.below(K)));
    }
    const LabelSequence expected = reference_collapse(path, blank);

    // One-hot logits, and the same argmax hidden inside random logits.
    TensorD one_hot({steps, K});
    TensorD noisy({steps, K});
    for (std::size_t t = 0; t < steps; ++t) {
      one_hot.at(t, path[t]) = 1.0;
      for (std::size_t k = 0; k < K; ++k) noisy.at(t, k) = rng.uniform(-2.0, 1.0);
      noisy.at(t, path[t]) = 1.5;
    }
    bool ok = greedy_decode_indices(one_hot) == expected && collapse(path, blank) == expected &&
              greedy_decode_indices(noisy) == expected;

    // Blank removal: no blank in the output, and inserting blank frames between
    // distinct labels changes nothing.
    ok = ok && std::find(expected.begin(), expected.end(), blank) == expected.end();
    std::vector<int> padded;
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0 && path[t] != path[t - 1] && path[t] != blank && path[t - 1] != blank) padded.push_back(blank);
      padded.push_back(path[t]);
    }
    ok = ok && collapse(padded, blank) == expected;

    // Repeat collapse: stretching any frame leaves the decode unchanged.
    std::vector<int> stretched;
    for (int s : path)
      for (std::uint64_t r = 0, n = 1 + rng.below(3); r < n; ++r) stretched.push_back(s);
    ok = ok && collapse(stretched, blank) == expected;

    // Ties resolve to the lowest class index, identically on every call.
    TensorD tied({steps, K}, 0.25);
    std::vector<int> lowest(steps, 0);
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t a = rng.below(K), b = rng.below(K);
      tied.at(t, a) = tied.at(t, b) = 2.0;
      lowest[t] = static_cast<int>(std::min(a, b));
    }
    const LabelSequence first = greedy_decode_indices(tied);
    ok = ok && first == reference_collapse(lowest, blank) && greedy_decode_indices(tied) == first;
    failures += !ok;
  }
  expect(o, failures == 0, std::to_string(failures) + " of 1000 cases failed");
  if (o.pass) o.detail = "1000 cases, 0 failures";
  return o;
}

Outcome serialization(const fs::path& work) {
  Outcome o;
  fs::create_directories(work);
  const ModelConfig config = latin_config();
  const auto p = init_params<float>(config, 11);
  const fs::path path = work / "latin.ckpt";
  save_checkpoint(p, config, path);
  const Checkpoint ck = load_checkpoint(path);
  expect(o, ck.config == config, "config changed in round trip");
  bool bits = true;
  std::vector<const Tensor*> before, after;
  p.for_each([&](std::string_view, const Tensor& t) { before.push_back(&t); });
  ck.params.for_each([&](std::string_view, const Tensor& t) { after.push_back(&t); });
  bits = before.size() == after.size();
  for (std::size_t i = 0; bits && i < before.size(); ++i)
    bits = before[i]->shape() == after[i]->shape() &&
           std::equal(before[i]->data(), before[i]->data() + before[i]->size(), after[i]->data(),
                      [](float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; });
  expect(o, bits, "parameters differ after round trip");
  Rng rng(5);
  Tensor img({16, 64, 3});
  for (float& v : img.values()) v = static_cast<float>(rng.uniform());
  const auto a = forward(img, p, config), b = forward(img, ck.params, ck.config);
  expect(o, std::memcmp(a.logits.data(), b.logits.data(), a.logits.size() * sizeof(float)) == 0 &&
                std::memcmp(&a.yp, &b.yp, sizeof a.yp) == 0,
         "forward output differs after round trip");

  const std::string good = slurp(path);
  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream(work / name, std::ios::binary) << bytes;
    return work / name;
  };
  std::string bad_magic = good;
  bad_magic.replace(0, 6, "NOTCKP");
  std::string widened = good;
  const auto c1 = widened.find("c1=32");
  if (c1 != std::string::npos) widened.replace(c1, 5, "c1=40");
  const ErrorCode magic = code_of([&] { load_checkpoint(write("bad_magic.ckpt", bad_magic)); });
  const ErrorCode truncated =
      code_of([&] { load_checkpoint(write("truncated.ckpt", good.substr(0, good.size() * 2 / 3))); });
  const ErrorCode mismatch = code_of([&] { load_checkpoint(write("mismatch.ckpt", widened)); });
  expect(o, magic == ErrorCode::kBadMagic, std::string("bad magic gave ") + std::string(to_string(magic)));
  expect(o, truncated == ErrorCode::kTruncatedPayload, std::string("truncation gave ") + std::string(to_string(truncated)));
  expect(o, mismatch == ErrorCode::kShapeMismatch, std::string("shape mismatch gave ") + std::string(to_string(mismatch)));
  if (o.pass) o.detail = "bit-exact round trip; bad_magic, truncated_payload, shape_mismatch";
  return o;
}

int cli_quiet(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != cli::kOk) std::cerr << e.str();
  return code;
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  std::size_t other = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
  files = rel.size();
  if (rel.size() != other) return false;
  return std::all_of(rel.begin(), rel.end(), [&](const fs::path& r) { return slurp(a / r) == slurp(b / r); });
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  fs::remove_all(work);
  fs::create_directories(work);
  std::string out[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = work / ("synth" + std::to_string(run));
    expect(o,
           cli_quiet({"synth", "--out", dir.string(), "--count", "120", "--augment", "0.3", "--len-max", "5", "--seed",
                      "17"},
                     &out[run]) == cli::kOk,
           "synth failed");
  }
  std::size_t files = 0;
  expect(o, same_tree(work / "synth0", work / "synth1", files) && files == 121, "synth output differs");

  // Same output path both times so the printed summary is comparable too.
  const fs::path ckpt = work / "epoch0.ckpt";
  std::string bytes[2], log[2];
  for (int run = 0; run < 2; ++run) {
    expect(o,
           cli_quiet({"train", "--data", (work / "synth0").string(), "--val", (work / "synth0").string(), "--out",
                      ckpt.string(), "--preset", "toy", "--epochs", "1", "--batch", "16", "--seed", "5"},
                     &out[run]) == cli::kOk,
           "train failed");
    bytes[run] = slurp(ckpt);
    log[run] = slurp(fs::path(ckpt.string() + ".log"));
    fs::remove(ckpt);
  }
  expect(o, out[0] == out[1], "train output differs");
  expect(o, !bytes[0].empty() && bytes[0] == bytes[1], "epoch-0 checkpoints differ");
  expect(o, !log[0].empty() && log[0] == log[1], "epoch-0 logs differ");
  if (o.pass) o.detail = "synth: " + std::to_string(files) + " identical files; epoch 0 checkpoint and log identical";
  return o;
}

struct VariantRun {
  AttentionVariant variant;
  Metrics test;
  std::size_t params = 0, epochs = 0;
  double latency_ms = 0, seconds = 0;
};

// Trains the toy configuration for every attention variant on one shared dataset.
std::vector<VariantRun> toy_runs(const fs::path& work) {
  const std::u32string charset = U"0123456789";
  const GlyphAtlas glyphs = GlyphAtlas::builtin();
  auto make = [&](const char* name, std::size_t count, std::uint64_t seed) {
    DatasetOptions opt;
    opt.count = count;
    opt.vertical_fraction = 1.0 / 6.0;
    opt.len_min = 1;
    opt.len_max = 5;
    opt.augment.level = 0.3;
    opt.seed = seed;
    opt.charset = charset;
    const fs::path dir = work / name;
    fs::remove_all(dir);
    generate_dataset(dir, opt, glyphs);
    return read_dataset(dir, charset);
  };
  const auto train_set = make("train", 2000, 101);
  const auto val_set = make("val", 200, 202);
  const auto test_set = make("test", 200, 303);
  const auto test_samples = prepare_samples(test_set, charset);

  std::vector<VariantRun> runs;
  for (AttentionVariant v :
       {AttentionVariant::kNone, AttentionVariant::kGse1, AttentionVariant::kGse2, AttentionVariant::kCbam2}) {
    const ModelConfig config = toy_config(charset, v);
    TrainConfig tc;
    tc.seed = 7;
    const std::string name(to_string(v));
    const auto t0 = Clock::now();
    const TrainResult result = train(train_set, val_set, config, tc, work / ("toy_" + name + ".ckpt"));
    VariantRun r{v, evaluate(result.best, config, test_samples, tc.lambda), param_count(config),
                 result.epochs.size(), 0, seconds_since(t0)};
    const auto l0 = Clock::now();
    for (const auto& s : test_samples) forward(s.image, result.best, config);
    r.latency_ms = seconds_since(l0) * 1000.0 / static_cast<double>(test_samples.size());
    std::cout << "  toy " << name << ": " << r.epochs << " epochs, " << fmt("%.0f", r.seconds) << " s, word "
              << fmt("%.4f", r.test.word_acc) << ", orient " << fmt("%.4f", r.test.orient_acc) << std::endl;
    runs.push_back(r);
  }
  return runs;
}

Outcome check_toy(const VariantRun& r) {
  Outcome o;
  const std::string name(to_string(r.variant));
  expect(o, r.epochs <= 30, name + " ran " + std::to_string(r.epochs) + " epochs");
  expect(o, r.seconds <= 900, name + " took " + fmt("%.0f", r.seconds) + " s");
  expect(o, r.test.count == 200, name + " evaluated " + std::to_string(r.test.count) + " crops");
  expect(o, r.test.word_acc >= 0.90, name + " word accuracy " + fmt("%.4f", r.test.word_acc));
  expect(o, r.test.orient_acc >= 0.95, name + " orientation accuracy " + fmt("%.4f", r.test.orient_acc));
  return o;
}

void print_ablation(const std::vector<VariantRun>& runs) {
  std::cout << "  attention  word_acc  char_acc  orient_acc  params  latency_ms\n";
  for (const auto& r : runs) {
    char line[128];
    std::snprintf(line, sizeof line, "  %-9s  %8.4f  %8.4f  %10.4f  %6zu  %10.3f\n",
                  std::string(to_string(r.variant)).c_str(), r.test.word_acc, r.test.char_acc, r.test.orient_acc,
                  r.params, r.latency_ms);
    std::cout << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("STRIDE acceptance suite");
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "stride_acceptance").string();
  app.add_option("--only", only, "Criteria to run, e.g. 1,2,5")->delimiter(',')->check(CLI::Range(1, 9));
  app.add_option("--work", work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  auto selected = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  int failed = 0;
  auto report = [&](int n, const char* title, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << n << "  " << title << ": " << o.detail
              << std::endl;
    failed += !o.pass;
  };
  auto guarded = [&](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  const fs::path root(work);
  if (selected(1)) report(1, "ctc oracle", guarded(ctc_oracle));
  if (selected(2)) report(2, "gradient suite", guarded(gradient_suite));
  if (selected(3)) report(3, "parameter budget", guarded(parameter_budget));
  if (selected(4)) report(4, "shape contract", guarded(shape_contract));
  if (selected(5) || selected(6)) {
    std::vector<VariantRun> runs;
    const Outcome setup = guarded([&] {
      runs = toy_runs(root / "toy");
      return Outcome{};
    });
    if (selected(5)) {
      Outcome o = setup;
      if (o.pass) {
        o = check_toy(runs.back());
        if (o.pass)
          o.detail = "cbam2 word " + fmt("%.4f", runs.back().test.word_acc) + ", orientation " +
                     fmt("%.4f", runs.back().test.orient_acc) + " after " + std::to_string(runs.back().epochs) +
                     " epochs in " + fmt("%.0f", runs.back().seconds) + " s";
      }
      report(5, "toy training", o);
    }
    if (selected(6)) {
      Outcome o = setup;
      for (const auto& r : runs) {
        const Outcome one = check_toy(r);
        expect(o, one.pass, one.detail);
      }
      if (!runs.empty()) print_ablation(runs);
      if (o.pass) o.detail = "all four attention variants converged";
      report(6, "ablation harness", o);
    }
  }
  if (selected(7)) report(7, "decoding properties", guarded(decoding_properties));
  if (selected(8)) report(8, "serialization", guarded([&] { return serialization(root / "ckpt"); }));
  if (selected(9)) report(9, "determinism", guarded([&] { return determinism(root / "determinism"); }));
  return failed == 0 ? 0 : 1;
}
