/* Copyright 2026 The RoomRank Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef ROOMRANK_TRAIN_HPP_
#define ROOMRANK_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "roomrank/errors.hpp"
#include "roomrank/features.hpp"
#include "roomrank/rng.hpp"
#include "roomrank/scorer.hpp"

namespace roomrank {

inline constexpr std::uint64_t kStreamEpoch = 5;

struct TrainConfig {
  int epochs = 50;
  double lr_start = 1e-4;
  double lr_floor = 1e-6;
  double lr_decay = 0.5;
  int plateau_epochs = 3;  // epochs without val improvement before decay
  int batch_size = 16;
  double huber_delta = 1.0;
  std::uint64_t seed = 42;
  bool augmentation = true;
};

struct TrainExample {
  MelSpectrogram mel;
  double label = 0.0;
};

struct EpochLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ScorerModel model;
  std::vector<EpochLogRow> log;
  double best_val_loss = 0.0;
  int best_epoch = 0;
};

inline double mean_validation_loss(const ScorerModel& model,
                                   const std::vector<TrainExample>& examples, double huber_delta) {
  double total = 0.0;
  for (const auto& ex : examples) {
    const double score = forward(model, ex.mel, ForwardMode::kInfer);
    total += huber_loss(score, ex.label, huber_delta);
  }
  return total / static_cast<double>(examples.size());
}

// Fraction of examples whose thresholded score matches the thresholded label.
inline double threshold_accuracy(const ScorerModel& model,
                                 const std::vector<TrainExample>& examples,
                                 double threshold = 0.5) {
  if (examples.empty()) return 0.0;
  int hits = 0;
  for (const auto& ex : examples) {
    const double score = forward(model, ex.mel, ForwardMode::kInfer);
    if ((score >= threshold) == (ex.label >= threshold)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

// Mini-batch Adam on the standard architecture. Deterministic given the
// seed: shuffling, augmentation, and dropout all draw from one substream per
// epoch, consumed in a fixed order. Returns the lowest-validation-loss
// snapshot with its parameters rounded to float32 values, so saved copies
// reproduce its scores bit-exactly.
inline TrainResult train(const std::vector<TrainExample>& train_examples,
                         const std::vector<TrainExample>& val_examples, const TrainConfig& config,
                         const std::function<void(const EpochLogRow&)>& on_epoch = {}) {
  if (train_examples.size() < 2 || val_examples.size() < 2) {
    throw InvalidArgument("training needs at least 2 train and 2 validation examples");
  }
  if (config.epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (config.lr_floor > config.lr_start) throw InvalidArgument("lr floor above starting rate");

  const int in_h = train_examples[0].mel.n_mels;
  const int in_w = train_examples[0].mel.n_frames;
  for (const auto& ex : train_examples) {
    if (ex.mel.n_mels != in_h || ex.mel.n_frames != in_w) {
      throw InvalidArgument("inconsistent spectrogram shapes in training set");
    }
  }

  ScorerModel model = ScorerModel::architecture(in_h, in_w, 5, 16, 7, 5, 256);
  model.init_weights(config.seed);

  std::vector<double> weights = model.flatten_parameters();
  AdamState adam(weights.size());

  TrainResult result;
  result.best_val_loss = mean_validation_loss(model, val_examples, config.huber_delta);
  std::vector<double> best_weights = weights;
  result.best_epoch = 0;

  double lr = config.lr_start;
  int stale_epochs = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(substream_seed(config.seed, kStreamEpoch, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train_examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      ScorerGradients batch_grads(model);
      for (std::size_t bi = start; bi < end; ++bi) {
        const TrainExample& ex = train_examples[order[bi]];
        const MelSpectrogram mel = config.augmentation ? augment(ex.mel, rng) : ex.mel;
        BackwardResult res =
            backward(model, mel, ex.label, ForwardMode::kTrain, &rng, config.huber_delta);
        epoch_loss += res.loss;
        batch_grads.accumulate(res.grads);
      }
      batch_grads.scale(1.0 / static_cast<double>(end - start));
      adam_step(weights, batch_grads.flatten(), adam, lr);
      model.load_parameters(weights);
    }
    epoch_loss /= static_cast<double>(train_examples.size());
    if (!std::isfinite(epoch_loss)) {
      throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }

    const double val_loss = mean_validation_loss(model, val_examples, config.huber_delta);
    result.log.push_back({epoch, epoch_loss, val_loss, lr});
    if (on_epoch) on_epoch(result.log.back());

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_weights = weights;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= config.plateau_epochs && lr > config.lr_floor) {
        lr = std::max(lr * config.lr_decay, config.lr_floor);
        stale_epochs = 0;
      }
    }
  }

  model.load_parameters(best_weights);
  model.quantize_to_float32();
  result.model = std::move(model);
  return result;
}

inline void write_training_log(const std::filesystem::path& path,
                               const std::vector<EpochLogRow>& log) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write training log: " + path.string());
  f << "epoch,train_loss,val_loss,lr\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.8f,%.8f,%.8f\n", row.epoch, row.train_loss, row.val_loss,
                  row.lr);
    f << buf;
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace roomrank

#endif  // ROOMRANK_TRAIN_HPP_
