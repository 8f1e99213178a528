// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "stride/charset.hpp"
#include "stride/checkpoint.hpp"
#include "stride/errors.hpp"
#include "stride/geometry.hpp"
#include "stride/ops.hpp"

namespace stride {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

std::vector<Tensor*> tensors(ModelParams<float>& p) {
  std::vector<Tensor*> out;
  p.for_each([&](std::string_view, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<const Tensor*> tensors(const ModelParams<float>& p) {
  std::vector<const Tensor*> out;
  p.for_each([&](std::string_view, const Tensor& t) { out.push_back(&t); });
  return out;
}

void zero(ModelParams<float>& p) {
  p.for_each([](std::string_view, Tensor& t) { t.fill(0.0f); });
}

void add_into(ModelParams<float>& acc, const ModelParams<float>& g) {
  auto a = tensors(acc);
  auto b = tensors(g);
  for (std::size_t i = 0; i < a.size(); ++i) *a[i] += *b[i];
}

char32_t fold_case(char32_t c) {
  if ((c >= U'A' && c <= U'Z') || (c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  return c;
}

std::u32string folded(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = fold_case(c);
  return out;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(seed ^ splitmix64(a * 0x9E3779B97F4A7C15ULL + b));
}

}  // namespace

void TrainConfig::validate() const {
  check(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be at least 1");
  check(lr_floor > 0 && lr_floor < lr, ErrorCode::kInvalidArgument, "need 0 < lr floor < initial lr");
  check(patience >= 1, ErrorCode::kInvalidArgument, "patience must be at least 1");
  check(lr_factor > 0 && lr_factor < 1, ErrorCode::kInvalidArgument, "lr factor must lie in (0, 1)");
  check(lambda >= 0, ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  check(orient_lr_scale > 0, ErrorCode::kInvalidArgument, "orientation head lr scale must be positive");
  check(aug_increment >= 0 && aug_max >= 0 && aug_max <= 1, ErrorCode::kInvalidArgument,
        "augmentation increment must be >= 0 and max in [0, 1]");
  check(ws_sigmas > 0, ErrorCode::kInvalidArgument, "weak-supervision threshold must be positive");
  check(max_epochs >= 1, ErrorCode::kInvalidArgument, "max epochs must be at least 1");
  check(threads >= 1, ErrorCode::kInvalidArgument, "threads must be at least 1");
}

TrainState make_train_state(const ModelParams<float>& params, const TrainConfig& config) {
  TrainState s;
  s.m = params;
  s.v = params;
  zero(s.m);
  zero(s.v);
  s.lr = config.lr;
  return s;
}

bool adam_step(ModelParams<float>& params, const ModelParams<float>& grads, TrainState& state, double lr,
               double head_lr_scale) {
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  check(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(), ErrorCode::kShapeMismatch,
        "adam: parameter structure mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    check(p[i]->shape() == g[i]->shape() && p[i]->shape() == m[i]->shape() && p[i]->shape() == v[i]->shape(),
          ErrorCode::kShapeMismatch, "adam: shape mismatch");
    for (float x : g[i]->values())
      if (!std::isfinite(x)) return false;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool head = p[i] == &params.orient_w || p[i] == &params.orient_b;
    const double step = head ? lr * head_lr_scale : lr;
    float* pw = p[i]->data();
    float* mw = m[i]->data();
    float* vw = v[i]->data();
    const float* gw = g[i]->data();
    for (std::size_t k = 0; k < p[i]->size(); ++k) {
      const double gk = gw[k];
      const double mk = kBeta1 * mw[k] + (1 - kBeta1) * gk;
      const double vk = kBeta2 * vw[k] + (1 - kBeta2) * gk * gk;
      mw[k] = static_cast<float>(mk);
      vw[k] = static_cast<float>(vk);
      pw[k] = static_cast<float>(pw[k] - step * (mk / c1) / (std::sqrt(vk / c2) + kEps));
    }
  }
  return true;
}

ScheduleDecision lr_schedule(TrainState& state, double val_loss, const TrainConfig& config) {
  ScheduleDecision d{state.lr, false, false};
  if (val_loss < state.best_val) {
    state.best_val = val_loss;
    state.since_improvement = 0;
    return d;
  }
  if (++state.since_improvement < config.patience) return d;
  state.since_improvement = 0;
  const double next = state.lr * config.lr_factor;
  // Tolerate round-off so that an exact landing on the floor still counts.
  if (next < config.lr_floor * (1 - 1e-9)) {
    d.stop = true;
    return d;
  }
  state.lr = next;
  d.lr = next;
  d.halved = true;
  return d;
}

std::size_t curriculum_max_length(std::size_t epoch, const TrainConfig& config) {
  if (!config.curriculum) return std::numeric_limits<std::size_t>::max();
  return config.curriculum_start + epoch * config.curriculum_step;
}

CurriculumSlice curriculum_filter(std::span<const std::size_t> lengths, std::size_t epoch, const TrainConfig& config) {
  CurriculumSlice out;
  const std::size_t max_len = curriculum_max_length(epoch, config);
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (lengths[i] <= max_len) out.ids.push_back(i);
  out.level = std::min(1.0, static_cast<double>(epoch) * config.aug_increment);
  return out;
}

WeakSupervisionResult weak_supervision_filter(std::span<const std::size_t> ids, std::span<const double> losses,
                                              TrainState& state, std::size_t epoch, const TrainConfig& config) {
  check(ids.size() == losses.size(), ErrorCode::kInvalidArgument, "weak supervision: ids and losses differ in length");
  WeakSupervisionResult r;
  std::vector<std::size_t> finite;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (std::isfinite(losses[i])) finite.push_back(i);
  if (finite.size() < config.ws_min_samples) {
    r.kept.assign(ids.begin(), ids.end());
    return r;
  }
  double mean = 0;
  for (auto i : finite) mean += losses[i];
  mean /= static_cast<double>(finite.size());
  double var = 0;
  for (auto i : finite) var += (losses[i] - mean) * (losses[i] - mean);
  const double threshold = mean + config.ws_sigmas * std::sqrt(var / static_cast<double>(finite.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (std::isfinite(losses[i]) && losses[i] > threshold) {
      r.dropped.push_back(ids[i]);
      state.dropped[ids[i]] = epoch;
    } else {
      r.kept.push_back(ids[i]);
    }
  }
  return r;
}

bool readmit(TrainState& state, std::size_t id, std::size_t epoch, const TrainConfig& config) {
  auto it = state.dropped.find(id);
  if (it == state.dropped.end()) return true;
  if (epoch >= it->second + config.ws_readmit_after) {
    state.dropped.erase(it);
    return true;
  }
  return false;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

Sample prepare_sample(const WordCrop& crop, const std::u32string& charset) {
  check(crop.image.rank() == 3 && crop.image.dim(2) == 3, ErrorCode::kShape, "crop must be H x W x 3");
  Sample s;
  s.image = normalize_crop(crop.image, is_vertical_candidate(crop.image.dim(0), crop.image.dim(1)));
  s.target = encode_labels(crop.text, charset);
  s.text = crop.text;
  s.orientation = static_cast<int>(crop.orientation);
  return s;
}

std::vector<Sample> prepare_samples(std::span<const WordCrop> crops, const std::u32string& charset) {
  std::vector<Sample> out;
  out.reserve(crops.size());
  for (const auto& c : crops) out.push_back(prepare_sample(c, charset));
  return out;
}

Prediction recognize(const ModelParams<float>& params, const ModelConfig& config, const Tensor& image) {
  const auto fwd = forward(image, params, config);
  const Tensor probs = softmax_lastdim(fwd.logits);
  Prediction p;
  p.vertical_prob = fwd.yp;
  p.text = greedy_decode(fwd.logits, config.charset);
  const std::size_t T = probs.dim(0), K = probs.dim(1);
  int prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (probs.at(t, k) > probs.at(t, arg)) arg = k;
    const int a = static_cast<int>(arg);
    if (a != config.blank() && a != prev) p.confidences.push_back(probs.at(t, arg));
    prev = a;
  }
  return p;
}

Metrics evaluate(const ModelParams<float>& params, const ModelConfig& config, std::span<const Sample> samples,
                 double lambda, bool case_insensitive) {
  Metrics m;
  m.count = samples.size();
  if (samples.empty()) return m;
  std::size_t words = 0, orient = 0, dist = 0, ref_len = 0, feasible = 0;
  double loss = 0;
  for (const auto& s : samples) {
    const auto fwd = forward(s.image, params, config);
    std::u32string hyp = greedy_decode(fwd.logits, config.charset);
    std::u32string ref = s.text;
    if (case_insensitive) {
      hyp = folded(hyp);
      ref = folded(ref);
    }
    words += hyp == ref;
    dist += edit_distance(hyp, ref);
    ref_len += ref.size();
    orient += static_cast<int>(fwd.yp > 0.5f) == s.orientation;
    try {
      const auto ctc = ctc_loss(log_softmax_lastdim(fwd.logits), s.target, false);
      const double yp = fwd.yp;
      const int y = s.orientation;
      loss += combined_loss(ctc.loss, orientation_loss(std::span<const double>(&yp, 1), std::span<const int>(&y, 1)),
                            lambda);
      ++feasible;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoAlignment) throw;
      ++m.infeasible;
    }
  }
  const double n = static_cast<double>(samples.size());
  m.word_acc = static_cast<double>(words) / n;
  m.orient_acc = static_cast<double>(orient) / n;
  m.char_acc = ref_len ? 1.0 - static_cast<double>(dist) / static_cast<double>(ref_len) : 1.0;
  m.loss = feasible ? loss / static_cast<double>(feasible) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

StepStats train_step(ModelParams<float>& params, TrainState& state, std::span<const Sample* const> batch,
                     const ModelConfig& model, const TrainConfig& config) {
  StepStats st;
  st.sample_losses.assign(batch.size(), std::numeric_limits<double>::quiet_NaN());
  if (batch.empty()) return st;

  ModelParams<float> acc = params;
  zero(acc);
  const std::size_t workers = std::min(config.threads, batch.size());
  std::vector<ModelParams<float>> bufs(workers, acc);
  std::vector<int> ok(batch.size(), 0);
  std::vector<std::exception_ptr> errors(workers);

  auto run = [&](std::size_t w, std::size_t i) {
    try {
      zero(bufs[w]);
      const Sample& s = *batch[i];
      const auto r = sample_loss(params, model, s.image, s.target, s.orientation, config.lambda, &bufs[w], 1.0f);
      st.sample_losses[i] = r.total;
      ok[i] = 1;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoAlignment) errors[w] = std::current_exception();
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  for (std::size_t start = 0; start < batch.size(); start += workers) {
    const std::size_t n = std::min(workers, batch.size() - start);
    if (n == 1) {
      run(0, start);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < n; ++w) pool.emplace_back(run, w, start + w);
      run(0, start);
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t w = 0; w < n; ++w)
      if (ok[start + w]) add_into(acc, bufs[w]);
  }

  double total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (ok[i]) {
      ++st.used;
      total += st.sample_losses[i];
    } else {
      ++st.skipped;
    }
  }
  if (st.used == 0) return st;
  st.loss = total / static_cast<double>(st.used);

  const float inv = 1.0f / static_cast<float>(st.used);
  double sq = 0;
  for (Tensor* t : tensors(acc)) {
    *t *= inv;
    for (float x : t->values()) sq += static_cast<double>(x) * x;
  }
  st.grad_norm = std::sqrt(sq);
  if (!std::isfinite(st.loss) || !std::isfinite(st.grad_norm)) return st;
  if (config.clip_norm > 0 && st.grad_norm > config.clip_norm) {
    const auto s = static_cast<float>(config.clip_norm / st.grad_norm);
    for (Tensor* t : tensors(acc)) *t *= s;
  }
  st.applied = adam_step(params, acc, state, state.lr, config.orient_lr_scale);
  return st;
}

std::string log_header() { return "epoch\tlr\ttrain_loss\tval_loss\tval_word_acc\tval_char_acc\tval_orient_acc"; }

std::string log_row(const EpochLog& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu\t%.6g\t%.6f\t%.6f\t%.4f\t%.4f\t%.4f", r.epoch, r.lr, r.train_loss, r.val_loss,
                r.val.word_acc, r.val.char_acc, r.val.orient_acc);
  return buf;
}

TrainResult train(std::span<const WordCrop> train_set, std::span<const WordCrop> val_set, const ModelConfig& model,
                  const TrainConfig& config, const std::filesystem::path& checkpoint, std::ostream* log) {
  config.validate();
  model.validate();
  check(!train_set.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  check(!val_set.empty(), ErrorCode::kInvalidArgument, "validation set is empty");

  const std::vector<Sample> clean = prepare_samples(train_set, model.charset);
  const std::vector<Sample> val = prepare_samples(val_set, model.charset);
  std::vector<std::size_t> lengths;
  for (const auto& c : train_set) lengths.push_back(c.text.size());

  std::ofstream file_log;
  if (!checkpoint.empty()) {
    auto log_path = checkpoint;
    log_path += ".log";
    file_log.open(log_path, std::ios::trunc);
    check(static_cast<bool>(file_log), ErrorCode::kIo, "cannot write " + log_path.string());
    file_log << log_header() << '\n';
  }
  if (log) *log << log_header() << '\n' << std::flush;

  ModelParams<float> params = init_params<float>(model, config.seed);
  TrainState state = make_train_state(params, config);
  TrainResult result;
  result.best = params;

  std::size_t non_finite_epochs = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const CurriculumSlice slice = curriculum_filter(lengths, epoch, config);
    std::vector<std::size_t> ids;
    for (auto id : slice.ids)
      if (!config.weak_supervision || readmit(state, id, epoch, config)) ids.push_back(id);
    check(!ids.empty(), ErrorCode::kInvalidArgument,
          "epoch " + std::to_string(epoch) + " has no training samples after filtering");

    Rng shuffle(mix(config.seed, epoch, 0x5348));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[shuffle.below(i)]);

    const double aug_level = slice.level * config.aug_max;
    EpochLog row;
    row.epoch = epoch;
    row.lr = state.lr;
    std::vector<double> losses(ids.size(), std::numeric_limits<double>::quiet_NaN());
    double loss_sum = 0;
    std::size_t loss_n = 0;

    for (std::size_t start = 0; start < ids.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, ids.size() - start);
      std::vector<Sample> augmented;
      std::vector<const Sample*> batch;
      if (aug_level > 0) {
        augmented.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t id = ids[start + k];
          Rng rng(mix(config.seed, epoch + 1, id));
          WordCrop crop = train_set[id];
          crop.image = augment(crop.image, AugmentSpec{aug_level}, rng);
          Sample s = clean[id];
          s.image = normalize_crop(crop.image, is_vertical_candidate(crop.image.dim(0), crop.image.dim(1)));
          augmented.push_back(std::move(s));
        }
        for (const auto& s : augmented) batch.push_back(&s);
      } else {
        for (std::size_t k = 0; k < n; ++k) batch.push_back(&clean[ids[start + k]]);
      }

      const StepStats st = train_step(params, state, batch, model, config);
      row.skipped += st.skipped;
      row.used += st.used;
      for (std::size_t k = 0; k < n; ++k) losses[start + k] = st.sample_losses[k];
      if (st.used > 0 && !st.applied)
        std::cerr << "epoch " << epoch << ": skipped batch at offset " << start << " (non-finite gradient)\n";
      if (st.applied) {
        loss_sum += st.loss * static_cast<double>(st.used);
        loss_n += st.used;
      }
    }
    check(row.used > 0, ErrorCode::kNoAlignment, "epoch " + std::to_string(epoch) + " had no usable samples");
    if (row.skipped > 0) std::cerr << "epoch " << epoch << ": skipped " << row.skipped << " infeasible samples\n";
    row.train_loss = loss_n ? loss_sum / static_cast<double>(loss_n) : std::numeric_limits<double>::quiet_NaN();

    if (config.weak_supervision) row.dropped = weak_supervision_filter(ids, losses, state, epoch, config).dropped.size();

    row.val = evaluate(params, model, val, config.lambda, config.case_insensitive);
    row.val_loss = row.val.loss;
    const bool improved = row.val_loss < result.best_val_loss;
    if (improved) {
      result.best_val_loss = row.val_loss;
      result.best_epoch = epoch;
      result.best = params;
      if (!checkpoint.empty()) save_checkpoint(params, model, checkpoint);
    }
    result.epochs.push_back(row);
    if (log) *log << log_row(row) << '\n' << std::flush;
    if (file_log) file_log << log_row(row) << '\n' << std::flush;

    non_finite_epochs = std::isfinite(row.train_loss) && std::isfinite(row.val_loss) ? 0 : non_finite_epochs + 1;
    check(non_finite_epochs < 3, ErrorCode::kNumeric, "loss has been non-finite for 3 consecutive epochs");
    if (lr_schedule(state, row.val_loss, config).stop) {
      result.stopped_on_floor = true;
      break;
    }
  }
  if (!checkpoint.empty() && !std::filesystem::exists(checkpoint)) save_checkpoint(result.best, model, checkpoint);
  return result;
}

}  // namespace stride
