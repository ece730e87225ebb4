#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "revfraud/features/checkpoint.hpp"
#include "revfraud/features/dataset.hpp"
#include "revfraud/features/embedding_store.hpp"
#include "revfraud/pipeline/config.hpp"
#include "revfraud/pipeline/model.hpp"

namespace revfraud::pipeline {

/// Seeded shuffle, then the first round(ratio * n) rows train and the rest
/// validate. The shuffle stream is derived from `seed` so that it differs from
/// the sampler's stream for the same seed.
std::pair<std::vector<features::ReviewRow>, std::vector<features::ReviewRow>> split(
    std::span<const features::ReviewRow> rows, double ratio, std::uint64_t seed);

struct EvaluationResult {
  double accuracy = 0.0;
  double loss_sum = 0.0;
  std::size_t rows = 0;
};

/// Accuracy of classify-by-threshold against stored labels and the summed
/// contrastive loss, both in eval mode. Throws UndefinedMetricError for an
/// empty dataset and DataError for unlabelled rows.
EvaluationResult evaluate(const TwoBranchModel& model, const features::FeatureSchema& schema,
                          std::span<const features::ReviewRow> rows, const features::EmbeddingStore& store,
                          double threshold, double margin, std::size_t batch_size = 256);

/// Mean of -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
double nll_metric(std::span<const double> predicted_probabilities, std::span<const int> labels);

struct EpochMetrics {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double batch_loss = 0.0;  // mean train-mode mini-batch loss; 0 for epoch 0
};

using MetricsHistory = std::vector<EpochMetrics>;

/// One JSON object per line: {"epoch":..,"train_loss":..,"val_loss":..,"train_accuracy":..,"val_accuracy":..,"batch_loss":..}
void write_metrics(std::ostream& out, std::span<const EpochMetrics> history);

struct TrainResult {
  features::ModelCheckpoint final_checkpoint;
  features::ModelCheckpoint best_checkpoint;  // highest validation accuracy
  EpochMetrics initial;
  MetricsHistory history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Contrastive training with mean-reduced mini-batch loss and Adam. After each
/// epoch both splits are evaluated in eval mode with summed loss. Throws
/// DivergenceError when a batch loss is not finite.
TrainResult train(std::span<const features::ReviewRow> train_rows, std::span<const features::ReviewRow> val_rows,
                  const features::EmbeddingStore& store, const features::FeatureSchema& schema,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Applies one Adam update to every trainable tensor of the model and
/// invalidates outstanding forward tapes.
void apply_adam(TwoBranchModel& model, std::span<const DenseMatrix> gradients, ndmath::AdamState& state);

}  // namespace revfraud::pipeline
