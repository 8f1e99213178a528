// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stride/datagen.hpp"
#include "stride/model.hpp"

namespace stride {

struct TrainConfig {
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double lr_floor = 1e-5;
  std::size_t patience = 2;
  double lr_factor = 0.5;
  double lambda = 1.0;
  double orient_lr_scale = 100.0;  // multiplies the learning rate of the orientation dense layer

  bool curriculum = true;
  std::size_t curriculum_start = 3;  // max word length at epoch 0
  std::size_t curriculum_step = 1;   // added per epoch
  double aug_increment = 0.1;        // online augmentation level per epoch, capped at 1
  double aug_max = 0.3;              // scales the online level; 0 disables online augmentation

  bool weak_supervision = true;
  double ws_sigmas = 3.0;
  std::size_t ws_min_samples = 10;
  std::size_t ws_readmit_after = 3;

  std::size_t max_epochs = 30;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::size_t threads = 1;
  bool case_insensitive = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainState {
  ModelParams<float> m, v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  std::map<std::size_t, std::size_t> dropped;  // sample id -> epoch dropped
};

TrainState make_train_state(const ModelParams<float>& params, const TrainConfig& config);

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). The
/// orientation dense layer steps with lr * head_lr_scale. Returns false and
/// leaves everything untouched when a gradient is not finite.
bool adam_step(ModelParams<float>& params, const ModelParams<float>& grads, TrainState& state, double lr,
               double head_lr_scale = 1.0);

struct ScheduleDecision {
  double lr = 0;
  bool halved = false;
  bool stop = false;
};

/// Plateau halving; call once per epoch with the validation loss.
ScheduleDecision lr_schedule(TrainState& state, double val_loss, const TrainConfig& config);

struct CurriculumSlice {
  std::vector<std::size_t> ids;
  double level = 0;
};

std::size_t curriculum_max_length(std::size_t epoch, const TrainConfig& config);
CurriculumSlice curriculum_filter(std::span<const std::size_t> lengths, std::size_t epoch, const TrainConfig& config);

struct WeakSupervisionResult {
  std::vector<std::size_t> kept, dropped;
};

/// Drops ids whose loss exceeds mean + ws_sigmas * stddev and records the epoch.
WeakSupervisionResult weak_supervision_filter(std::span<const std::size_t> ids, std::span<const double> losses,
                                              TrainState& state, std::size_t epoch, const TrainConfig& config);

/// True if `id` is not currently dropped; expired drops are cleared.
bool readmit(TrainState& state, std::size_t id, std::size_t epoch, const TrainConfig& config);

std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

/// A crop ready for the network.
struct Sample {
  Tensor image;  // 16 x W x 3
  LabelSequence target;
  std::u32string text;
  int orientation = 0;
};

Sample prepare_sample(const WordCrop& crop, const std::u32string& charset);
std::vector<Sample> prepare_samples(std::span<const WordCrop> crops, const std::u32string& charset);

struct Prediction {
  std::u32string text;
  double vertical_prob = 0;
  std::vector<double> confidences;  // max softmax of each emitting frame
};

Prediction recognize(const ModelParams<float>& params, const ModelConfig& config, const Tensor& image);

struct Metrics {
  double word_acc = 0;
  double char_acc = 0;
  double orient_acc = 0;
  double loss = 0;  // mean combined loss over feasible samples
  std::size_t count = 0;
  std::size_t infeasible = 0;
};

Metrics evaluate(const ModelParams<float>& params, const ModelConfig& config, std::span<const Sample> samples,
                 double lambda = 1.0, bool case_insensitive = false);

struct StepStats {
  double loss = 0;  // mean combined loss over the feasible samples
  std::vector<double> sample_losses;  // NaN for skipped samples
  std::size_t used = 0;
  std::size_t skipped = 0;
  bool applied = false;
  double grad_norm = 0;
};

/// One optimiser step on a batch. Per-sample gradients are summed in batch
/// order whatever the thread count, so results do not depend on `threads`.
StepStats train_step(ModelParams<float>& params, TrainState& state, std::span<const Sample* const> batch,
                     const ModelConfig& model, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double val_loss = 0;
  Metrics val;
  std::size_t used = 0;
  std::size_t dropped = 0;
  std::size_t skipped = 0;
};

std::string log_header();
std::string log_row(const EpochLog& row);

struct TrainResult {
  ModelParams<float> best;
  std::vector<EpochLog> epochs;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  bool stopped_on_floor = false;
};

/// Runs the full loop. When `checkpoint` is non-empty the best model is saved
/// there and the TSV log is written to `<checkpoint>.log`; rows are also
/// streamed to `log` when given.
TrainResult train(std::span<const WordCrop> train_set, std::span<const WordCrop> val_set, const ModelConfig& model,
                  const TrainConfig& config, const std::filesystem::path& checkpoint = {}, std::ostream* log = nullptr);

}  // namespace stride
