// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "stride/charset.hpp"
#include "stride/checkpoint.hpp"
#include "stride/datagen.hpp"
#include "stride/errors.hpp"
#include "stride/geometry.hpp"
#include "stride/gradcheck.hpp"
#include "stride/image_io.hpp"
#include "stride/model.hpp"
#include "stride/trainer.hpp"

namespace stride::cli {

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNumeric:
      return kNumericFailure;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyCharset:
    case ErrorCode::kUnknownCharacter:
      return kUsage;
    default:
      return kData;
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct ModelFlags {
  std::string preset = "latin";
  std::string attention_name = "cbam2";
  std::string charset;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Layer widths: latin (reference) or toy (reduced)")
        ->check(CLI::IsMember({"latin", "toy"}));
    app->add_option("--attention", attention_name, "Attention variant")
        ->check(CLI::IsMember({"none", "gse1", "gse2", "cbam2"}));
    app->add_option("--charset", charset, "Model characters as a UTF-8 string");
  }

  ModelConfig build(const std::u32string& fallback) const {
    const AttentionVariant attention = parse_attention(attention_name);
    std::u32string cs = charset.empty() ? fallback : utf8_decode(charset);
    if (preset == "toy") {
      check(!cs.empty(), ErrorCode::kEmptyCharset, "toy preset needs a charset");
      ModelConfig c = toy_config(cs, attention);
      c.validate();
      return c;
    }
    ModelConfig c = latin_config(attention);
    if (!charset.empty()) c.charset = cs;
    c.validate();
    return c;
  }
};

std::u32string charset_of(const DatasetManifest& a, const DatasetManifest& b) {
  std::set<char32_t> chars;
  for (const auto* m : {&a, &b})
    for (const auto& row : m->rows) chars.insert(row.text.begin(), row.text.end());
  return std::u32string(chars.begin(), chars.end());
}

struct Synth {
  std::string out;
  DatasetOptions opt;
  std::string charset;
  std::string atlas;

  void add(CLI::App* app) {
    app->add_option("--out", out, "Output dataset directory")->required();
    app->add_option("--count", opt.count, "Number of crops")->check(CLI::PositiveNumber);
    app->add_option("--vertical-frac", opt.vertical_fraction, "Share of vertical crops")->check(CLI::Range(0.0, 1.0));
    app->add_option("--charset", charset, "Characters to draw from (UTF-8); default all atlas glyphs");
    app->add_option("--len-min", opt.len_min, "Shortest word")->check(CLI::PositiveNumber);
    app->add_option("--len-max", opt.len_max, "Longest word")->check(CLI::PositiveNumber);
    app->add_option("--augment", opt.augment.level, "Maximum augmentation level")->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", opt.seed, "Random seed");
    app->add_option("--atlas", atlas, "External glyph atlas stem (<stem>.ppm + <stem>.tsv)");
  }

  int run(std::ostream& os) {
    const GlyphAtlas glyphs = atlas.empty() ? GlyphAtlas::builtin() : GlyphAtlas::load(atlas);
    opt.charset = utf8_decode(charset);
    const auto m = generate_dataset(out, opt, glyphs);
    const std::size_t v = m.vertical_count();
    os << (std::filesystem::path(out) / "labels.tsv").string() << '\n'
       << "crops\t" << m.rows.size() << "\nhorizontal\t" << m.rows.size() - v << "\nvertical\t" << v << '\n';
    return kOk;
  }
};

struct Train {
  std::string data, val, out;
  ModelFlags model;
  TrainConfig cfg;
  bool no_curriculum = false, no_weak = false, no_clip = false;

  void add(CLI::App* app) {
    cfg.max_epochs = 30;
    app->add_option("--data", data, "Training dataset directory")->required();
    app->add_option("--val", val, "Validation dataset directory")->required();
    app->add_option("--out", out, "Checkpoint path (log goes to <out>.log)")->required();
    model.add(app);
    app->add_option("--epochs", cfg.max_epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    app->add_option("--seed", cfg.seed, "Random seed");
    app->add_flag("--no-curriculum", no_curriculum, "Train on all word lengths from the first epoch");
    app->add_flag("--no-weak-supervision", no_weak, "Never drop high-loss samples");
    app->add_option("--lambda", cfg.lambda, "Orientation loss weight")->check(CLI::NonNegativeNumber);
    app->add_option("--orient-lr-scale", cfg.orient_lr_scale, "Learning-rate multiplier for the orientation head")
        ->check(CLI::PositiveNumber);
    app->add_option("--batch", cfg.batch_size, "Batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", cfg.lr, "Initial learning rate")->check(CLI::PositiveNumber);
    app->add_option("--lr-floor", cfg.lr_floor, "Stop once the learning rate would fall below this")
        ->check(CLI::PositiveNumber);
    app->add_option("--curriculum-start", cfg.curriculum_start, "Longest word at epoch 0");
    app->add_option("--curriculum-step", cfg.curriculum_step, "Word length added per epoch");
    app->add_option("--aug-step", cfg.aug_increment, "Online augmentation level added per epoch")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--aug-max", cfg.aug_max, "Online augmentation scale (0 disables)")->check(CLI::Range(0.0, 1.0));
    app->add_flag("--no-clip", no_clip, "Disable gradient-norm clipping");
    app->add_option("--threads", cfg.threads, "Worker threads per batch")->check(CLI::PositiveNumber);
  }

  int run(std::ostream& os) {
    cfg.curriculum = !no_curriculum;
    cfg.weak_supervision = !no_weak;
    if (no_clip) cfg.clip_norm = 0;
    cfg.validate();
    const DatasetManifest tm = read_manifest(data), vm = read_manifest(val);
    check(!tm.rows.empty(), ErrorCode::kMalformedRow, data + ": dataset is empty");
    check(!vm.rows.empty(), ErrorCode::kMalformedRow, val + ": dataset is empty");
    const ModelConfig mc = model.build(charset_of(tm, vm));
    const auto train_set = read_dataset(data, mc.charset);
    const auto val_set = read_dataset(val, mc.charset);
    const auto result = train(train_set, val_set, mc, cfg, out, &os);
    os << "best_epoch\t" << result.best_epoch << "\nbest_val_loss\t" << fmt("%.6f", result.best_val_loss)
       << "\ncheckpoint\t" << out << '\n';
    return kOk;
  }
};

struct Eval {
  std::string model, data, format = "text";
  bool case_insensitive = false;
  double lambda = 1.0;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Checkpoint")->required();
    app->add_option("--data", data, "Dataset directory")->required();
    app->add_option("--format", format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));
    app->add_flag("--case-insensitive", case_insensitive, "Ignore letter case in word and char accuracy");
    app->add_option("--lambda", lambda, "Orientation loss weight for the reported loss")
        ->check(CLI::NonNegativeNumber);
  }

  int run(std::ostream& os) {
    const Checkpoint ck = load_checkpoint(model);
    const auto samples = prepare_samples(read_dataset(data, ck.config.charset), ck.config.charset);
    const Metrics m = evaluate(ck.params, ck.config, samples, lambda, case_insensitive);
    if (format == "tsv") {
      os << "word_acc\tchar_acc\torient_acc\tloss\tcount\n"
         << fmt("%.6f", m.word_acc) << '\t' << fmt("%.6f", m.char_acc) << '\t' << fmt("%.6f", m.orient_acc) << '\t'
         << fmt("%.6f", m.loss) << '\t' << m.count << '\n';
    } else {
      os << "word accuracy        " << fmt("%.4f", m.word_acc) << "\nchar accuracy        " << fmt("%.4f", m.char_acc)
         << "\norientation accuracy " << fmt("%.4f", m.orient_acc) << "\ncrops                " << m.count << '\n';
    }
    return kOk;
  }
};

std::array<Point, 4> parse_quad(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      check(used == tok.size(), ErrorCode::kInvalidArgument, "--quad: bad number '" + tok + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::kInvalidArgument, "--quad: bad number '" + tok + "'");
    }
  }
  check(v.size() == 8, ErrorCode::kInvalidArgument, "--quad expects x1,y1,x2,y2,x3,y3,x4,y4");
  return {Point{v[0], v[1]}, Point{v[2], v[3]}, Point{v[4], v[5]}, Point{v[6], v[7]}};
}

struct Infer {
  std::string model, image, quad;
  double angle = 0, threshold = kDefaultRectifyThresholdDeg;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Checkpoint")->required();
    app->add_option("--image", image, "Crop or scene image (binary PPM)")->required();
    app->add_option("--quad", quad, "Word corners x1,y1,...,x4,y4 clockwise from top-left");
    app->add_option("--angle", angle, "Detector rotation angle in degrees");
    app->add_option("--rectify-threshold", threshold, "Warp only when |angle| exceeds this")
        ->check(CLI::NonNegativeNumber);
  }

  int run(std::ostream& os) {
    const auto corners = quad.empty() ? std::array<Point, 4>{} : parse_quad(quad);
    const Checkpoint ck = load_checkpoint(model);
    Tensor img = read_ppm(image);
    if (!quad.empty()) {
      const Quad q{corners, angle};
      if (should_rectify(angle, threshold)) {
        const auto [w, h] = quad_extent(q);
        img = warp_perspective(img, q, w, h);
      } else {
        double x0 = corners[0].x, x1 = x0, y0 = corners[0].y, y1 = y0;
        for (const auto& p : corners) {
          x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
        }
        const auto cx0 = static_cast<std::size_t>(std::clamp(std::floor(x0), 0.0, double(img.dim(1) - 1)));
        const auto cy0 = static_cast<std::size_t>(std::clamp(std::floor(y0), 0.0, double(img.dim(0) - 1)));
        const auto cx1 = static_cast<std::size_t>(std::clamp(std::ceil(x1), double(cx0), double(img.dim(1) - 1)));
        const auto cy1 = static_cast<std::size_t>(std::clamp(std::ceil(y1), double(cy0), double(img.dim(0) - 1)));
        Tensor crop({cy1 - cy0 + 1, cx1 - cx0 + 1, 3});
        for (std::size_t y = cy0; y <= cy1; ++y)
          for (std::size_t x = cx0; x <= cx1; ++x)
            for (std::size_t c = 0; c < 3; ++c) crop.at(y - cy0, x - cx0, c) = img.at(y, x, c);
        img = std::move(crop);
      }
    }
    const Tensor input = normalize_crop(img, is_vertical_candidate(img.dim(0), img.dim(1)));
    const Prediction p = recognize(ck.params, ck.config, input);
    os << "text\t" << utf8_encode(p.text) << "\nvertical_prob\t" << fmt("%.6f", p.vertical_prob) << "\nconfidence\t";
    for (std::size_t i = 0; i < p.confidences.size(); ++i) os << (i ? "," : "") << fmt("%.4f", p.confidences[i]);
    os << '\n';
    return kOk;
  }
};

struct Bench {
  std::string model, format = "text";
  ModelFlags flags;
  std::size_t width = 64, iters = 50, warmup = 3;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Checkpoint; a randomly initialised model is used when omitted");
    flags.add(app);
    app->add_option("--width", width, "Input width (even, >= 8)")->check(CLI::PositiveNumber);
    app->add_option("--iters", iters, "Timed forward passes")->check(CLI::PositiveNumber);
    app->add_option("--warmup", warmup, "Untimed forward passes");
    app->add_option("--seed", seed, "Seed for weights and input");
    app->add_option("--format", format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));
  }

  int run(std::ostream& os) {
    check(width >= kMinInputWidth && width % 2 == 0, ErrorCode::kInvalidArgument, "--width must be even and >= 8");
    ModelConfig config;
    ModelParams<float> params;
    if (model.empty()) {
      config = flags.build(latin_charset());
      params = init_params<float>(config, seed);
    } else {
      Checkpoint ck = load_checkpoint(model);
      config = ck.config;
      params = std::move(ck.params);
    }
    Rng rng(seed);
    Tensor img({kInputHeight, width, 3});
    for (auto& v : img.values()) v = static_cast<float>(rng.uniform());
    for (std::size_t i = 0; i < warmup; ++i) forward(img, params, config);
    std::vector<double> ms;
    for (std::size_t i = 0; i < iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = forward(img, params, config);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      check(std::isfinite(out.yp), ErrorCode::kNumeric, "non-finite forward output");
    }
    const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const std::size_t n = ms.size();
    const double median = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    if (format == "tsv") {
      os << "width\titers\tmean_ms\tmedian_ms\n"
         << width << '\t' << iters << '\t' << fmt("%.4f", mean) << '\t' << fmt("%.4f", median) << '\n';
    } else {
      os << "width      " << width << "\niters      " << iters << "\nmean_ms    " << fmt("%.4f", mean)
         << "\nmedian_ms  " << fmt("%.4f", median) << '\n';
    }
    return kOk;
  }
};

struct GradCheck {
  GradCheckOptions opt;

  void add(CLI::App* app) { app->add_option("--seed", opt.seed, "Seed for the random test tensors"); }

  int run(std::ostream& os) {
    const auto report = run_gradcheck(opt);
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %8s %12s %12s %9s  %s\n", "check", "params", "max_rel_err", "worst_comp",
                  "tolerance", "status");
    os << line;
    for (const auto& r : report.results) {
      std::snprintf(line, sizeof line, "%-18s %8zu %12.3e %12.3e %9.0e  %s\n", r.name.c_str(), r.components,
                    r.max_rel_error, r.max_component_error, r.tolerance, r.passed() ? "ok" : "FAIL");
      os << line;
    }
    os << (report.passed() ? "all gradient checks passed" : "gradient check FAILED") << " in "
       << fmt("%.2f", report.seconds) << " s\n";
    return report.passed() ? kOk : kNumericFailure;
  }
};

struct Params {
  ModelFlags flags;
  bool breakdown = false;

  void add(CLI::App* app) {
    flags.add(app);
    app->add_flag("--breakdown", breakdown, "List every parameter tensor");
  }

  int run(std::ostream& os) {
    const ModelConfig config = flags.build(latin_charset());
    if (breakdown) {
      const auto p = make_params<float>(config);
      p.for_each([&](std::string_view name, const Tensor& t) {
        os << name << '\t' << shape_str(t.shape()) << '\t' << t.size() << '\n';
      });
    }
    os << param_count(config) << '\n';
    return kOk;
  }
};

}  // namespace

std::vector<std::string> read_config_tokens(const std::string& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kMissingFile, "cannot open config " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos, ErrorCode::kMalformedRow,
          path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    check(!key.empty(), ErrorCode::kMalformedRow, path + ":" + std::to_string(lineno) + ": empty key");
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return tokens;
}

int run(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app("Scene text recognition with orientation-aware CTC decoding", "stride");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  Synth synth;
  Train trainc;
  Eval eval;
  Infer infer;
  Bench bench;
  GradCheck gradcheck;
  Params params;
  std::string config_path;
  std::vector<std::pair<CLI::App*, std::function<int(std::ostream&)>>> commands;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    sub->add_option("--config", config_path, "File of key=value lines applied before command-line flags");
    commands.emplace_back(sub, [&cmd](std::ostream& os) { return cmd.run(os); });
  };
  add("synth", "Generate a synthetic word-crop dataset", synth);
  add("train", "Train a model", trainc);
  add("eval", "Word, character and orientation accuracy on a dataset", eval);
  add("infer", "Recognise one image", infer);
  add("bench", "Per-crop forward latency", bench);
  add("gradcheck", "Finite-difference validation of every gradient", gradcheck);
  add("params", "Exact parameter count of a configuration", params);

  std::vector<std::string> args;
  try {
    // Config values go right after the subcommand so later command-line flags win.
    std::vector<std::string> cfg_tokens;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == "--config" && i + 1 < raw.size()) {
        cfg_tokens = read_config_tokens(raw[i + 1]);
        ++i;
      } else if (raw[i].rfind("--config=", 0) == 0) {
        cfg_tokens = read_config_tokens(raw[i].substr(9));
      } else {
        args.push_back(raw[i]);
      }
    }
    if (!cfg_tokens.empty()) {
      auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.rfind("-", 0) != 0; });
      check(sub != args.end(), ErrorCode::kInvalidArgument, "--config needs a subcommand");
      args.insert(sub + 1, cfg_tokens.begin(), cfg_tokens.end());
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  try {
    for (auto& [sub, fn] : commands)
      if (sub->parsed()) return fn(out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace stride::cli
