#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alcnet/data.hpp"
#include "alcnet/eval.hpp"
#include "alcnet/net.hpp"
#include "alcnet/objective.hpp"

namespace alcnet::objective {

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double val_iou = 0.0;
  double val_niou = 0.0;
};

struct TrainOptions {
  TrainConfig config;
  /// Resize-then-crop augmentation; nullopt trains on the samples as given.
  std::optional<data::AugmentConfig> augment;
  /// Per-epoch CSV log; skipped when empty.
  std::filesystem::path log_csv;
  /// Best-validation checkpoint; skipped when empty.
  std::filesystem::path checkpoint;
  /// Reload the best weights into the network when training ends.
  bool restore_best = true;
  double threshold = 0.5;
  /// Stop after this many epochs without a new best; 0 runs every epoch.
  int patience = 0;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_iou = 0.0;
  bool diverged = false;
  std::string failure;
};

/// Epochs of shuffle, batch, augment, forward, soft-IoU loss, backward and an
/// AdaGrad step. Validation after every epoch picks the best weights by IoU,
/// or by training loss when `val` is empty. A non-finite loss or gradient
/// stops training, restores the last best weights and sets `diverged`.
TrainResult train(net::Network& model, std::span<const data::Sample> train_set,
                  std::span<const data::Sample> val_set, const TrainOptions& opts);

/// Sigmoid probabilities at the input resolution. Images whose sides are not
/// multiples of 4 are edge-padded for the forward pass and cropped back.
GrayImage predict(net::Network& model, const GrayImage& image);
std::vector<GrayImage> predict(net::Network& model,
                               std::span<const data::Sample> samples,
                               int threads = 0);

struct Evaluation {
  eval::MetricReport report;
  std::vector<GrayImage> probabilities;
  std::vector<BinaryMask> predictions;
};

Evaluation evaluate(net::Network& model, std::span<const data::Sample> samples,
                    double threshold = 0.5, bool with_roc = false, int threads = 0);

}  // namespace alcnet::objective
