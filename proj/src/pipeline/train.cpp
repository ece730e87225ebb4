#include "revfraud/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "revfraud/errors.hpp"

namespace revfraud::pipeline {

namespace {

// Splits [0, n) into batches of `size`; a trailing singleton joins the
// previous batch because train-mode batch norm needs at least two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size) out.emplace_back(start, std::min(n, start + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

features::ModelCheckpoint make_checkpoint(const TwoBranchModel& model, const features::FeatureSchema& schema,
                                          const TrainConfig& config, const ndmath::AdamState* adam) {
  features::ModelCheckpoint ck;
  ck.schema_hash = schema.hash();
  ck.model = model;
  ck.margin = config.margin;
  ck.threshold = config.threshold;
  ck.config_text = config.to_text();
  if (adam) ck.adam = *adam;
  return ck;
}

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

// splitmix64 finalizer over seed and stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::pair<std::vector<features::ReviewRow>, std::vector<features::ReviewRow>> split(
    std::span<const features::ReviewRow> rows, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  ndmath::Rng rng(derive_seed(seed, kSplitStream));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(rows.size())));
  std::pair<std::vector<features::ReviewRow>, std::vector<features::ReviewRow>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(rows[order[i]]);
  }
  return out;
}

EvaluationResult evaluate(const TwoBranchModel& model, const features::FeatureSchema& schema,
                          std::span<const features::ReviewRow> rows, const features::EmbeddingStore& store,
                          double threshold, double margin, std::size_t batch_size) {
  if (rows.empty()) throw UndefinedMetricError("evaluate: empty dataset");
  if (batch_size == 0) batch_size = rows.size();
  const contrastive::Margin m(margin);
  EvaluationResult res;
  res.rows = rows.size();
  std::size_t correct = 0;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const auto chunk = rows.subspan(start, std::min(batch_size, rows.size() - start));
    for (const auto& r : chunk) {
      if (!r.label) throw DataError("evaluate: row " + std::to_string(r.row_id) + " has no label");
    }
    const PairInputs in = make_inputs(chunk, store);
    const std::vector<double> d = pair_distances(model, schema, in);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (classify_distance(d[i], threshold) == in.labels[i]) ++correct;
      res.loss_sum += contrastive::pair_loss(d[i], in.labels[i], m);
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  return res;
}

double nll_metric(std::span<const double> predicted_probabilities, std::span<const int> labels) {
  if (predicted_probabilities.size() != labels.size()) {
    throw ShapeError("nll_metric: " + std::to_string(predicted_probabilities.size()) + " probabilities for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw UndefinedMetricError("nll_metric: no rows");
  constexpr double kClamp = 1e-12;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("nll_metric: labels must be 0 or 1");
    const double p = std::clamp(predicted_probabilities[i], kClamp, 1.0 - kClamp);
    total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(labels.size());
}

void write_metrics(std::ostream& out, std::span<const EpochMetrics> history) {
  for (const auto& e : history) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"val_loss", e.val_loss},
                     {"train_accuracy", e.train_accuracy},
                     {"val_accuracy", e.val_accuracy},
                     {"batch_loss", e.batch_loss}};
    out << j.dump() << '\n';
  }
}

void apply_adam(TwoBranchModel& model, std::span<const DenseMatrix> gradients, ndmath::AdamState& state) {
  const auto params = features::trainable_tensors(model);
  ndmath::adam_step(params, gradients, state);
  ++model.text_branch.revision;
  ++model.attribute_branch.revision;
}

TrainResult train(std::span<const features::ReviewRow> train_rows, std::span<const features::ReviewRow> val_rows,
                  const features::EmbeddingStore& store, const features::FeatureSchema& schema,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_rows.empty()) throw UndefinedMetricError("train: empty training split");
  if (store.dimension() != config.text_dim) {
    throw ConfigError("embedding dimension " + std::to_string(store.dimension()) + " does not match text_dim " +
                      std::to_string(config.text_dim));
  }
  for (const auto& r : train_rows) {
    if (!r.label) throw DataError("train: row " + std::to_string(r.row_id) + " has no label");
    (void)store.at(r.row_id);
  }

  const auto train_records = features::attributes_of(train_rows);
  TwoBranchModel model = init_model(config, schema, features::fit_normalizer(train_records, schema), config.seed);
  ndmath::AdamState adam = ndmath::make_adam_state(features::trainable_tensors(std::as_const(model)), config.adam);
  const contrastive::Margin margin(config.margin);
  ndmath::Rng rng(derive_seed(config.seed, kTrainStream));

  auto measure = [&](std::size_t epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    const auto tr = evaluate(model, schema, train_rows, store, config.threshold, config.margin);
    m.train_loss = tr.loss_sum;
    m.train_accuracy = tr.accuracy;
    if (!val_rows.empty()) {
      const auto va = evaluate(model, schema, val_rows, store, config.threshold, config.margin);
      m.val_loss = va.loss_sum;
      m.val_accuracy = va.accuracy;
    }
    return m;
  };

  TrainResult result;
  result.initial = measure(0);
  result.best_checkpoint = make_checkpoint(model, schema, config, nullptr);
  double best_accuracy = -1.0;

  std::vector<const features::ReviewRow*> order;
  order.reserve(train_rows.size());
  for (const auto& r : train_rows) order.push_back(&r);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<const features::ReviewRow*>(order));
    const auto bounds = batch_bounds(order.size(), config.batch_size);
    double batch_loss_total = 0.0;
    for (std::size_t b = 0; b < bounds.size(); ++b) {
      const auto [lo, hi] = bounds[b];
      const PairInputs in =
          make_inputs(std::span<const features::ReviewRow* const>(order.data() + lo, hi - lo), store);
      LossEvaluation ev =
          loss_and_gradients(model, schema, in, margin, contrastive::Reduction::mean, ndmath::Mode::train, rng);
      if (!std::isfinite(ev.loss)) throw DivergenceError("training loss is not finite", epoch, b);
      batch_loss_total += ev.loss;
      ndmath::update_running_statistics(model.text_branch, ev.outputs.text.tape);
      ndmath::update_running_statistics(model.attribute_branch, ev.outputs.attributes.tape);
      apply_adam(model, ev.gradients, adam);
    }

    EpochMetrics m = measure(epoch);
    m.batch_loss = batch_loss_total / static_cast<double>(bounds.size());
    if (!std::isfinite(m.train_loss)) throw DivergenceError("evaluation loss is not finite", epoch, bounds.size());
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
    const double score = val_rows.empty() ? m.train_accuracy : m.val_accuracy;
    if (score > best_accuracy) {
      best_accuracy = score;
      result.best_checkpoint = make_checkpoint(model, schema, config, &adam);
    }
  }
  result.final_checkpoint = make_checkpoint(model, schema, config, config.epochs > 0 ? &adam : nullptr);
  return result;
}

}  // namespace revfraud::pipeline
