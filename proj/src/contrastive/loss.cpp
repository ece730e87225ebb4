#include "revfraud/contrastive/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "revfraud/errors.hpp"

namespace revfraud::contrastive {

namespace {

void check_label(int label) {
  if (label != 0 && label != 1) throw DataError("pair label must be 0 or 1, got " + std::to_string(label));
}

void check_batch(const PairBatch& batch) {
  if (!batch.g1.same_shape(batch.g2)) throw ShapeError("pair batch: g1 and g2 shapes differ");
  if (batch.labels.size() != batch.g1.rows()) {
    throw ShapeError("pair batch: " + std::to_string(batch.labels.size()) + " labels for " +
                     std::to_string(batch.g1.rows()) + " pairs");
  }
  for (int y : batch.labels) check_label(y);
}

}  // namespace

Margin::Margin(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("margin must be a positive finite number");
}

double distance(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() != g2.size()) {
    throw ShapeError("distance: length " + std::to_string(g1.size()) + " vs " + std::to_string(g2.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    const double d = g1[i] - g2[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double loss_similar(double d) { return 0.5 * d * d; }

double loss_dissimilar(double d, Margin m) {
  const double gap = std::max(0.0, m.value() - d);
  return 0.5 * gap * gap;
}

double pair_loss(double d, int label, Margin m) {
  check_label(label);
  return label == 0 ? loss_similar(d) : loss_dissimilar(d, m);
}

double contrastive_loss(const PairBatch& batch, Margin m, Reduction reduction) {
  check_batch(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    total += pair_loss(distance(batch.g1.row(i), batch.g2.row(i)), batch.labels[i], m);
  }
  if (reduction == Reduction::mean && !batch.labels.empty()) total /= static_cast<double>(batch.labels.size());
  return total;
}

double loss_grad_wrt_distance(double d, int label, Margin m) {
  check_label(label);
  if (label == 0) return d;
  if (d > m.value()) return 0.0;
  return -(m.value() - d);
}

std::pair<std::vector<double>, std::vector<double>> distance_grad(std::span<const double> g1,
                                                                  std::span<const double> g2) {
  const double d = distance(g1, g2);
  std::vector<double> a(g1.size(), 0.0);
  std::vector<double> b(g1.size(), 0.0);
  if (d > 0.0) {
    for (std::size_t i = 0; i < g1.size(); ++i) {
      a[i] = (g1[i] - g2[i]) / d;
      b[i] = -a[i];
    }
  }
  return {std::move(a), std::move(b)};
}

LossAndGrad contrastive_loss_and_grad(const PairBatch& batch, Margin m, Reduction reduction) {
  check_batch(batch);
  const std::size_t pairs = batch.labels.size();
  const double scale = (reduction == Reduction::mean && pairs > 0) ? 1.0 / static_cast<double>(pairs) : 1.0;

  LossAndGrad out;
  out.grad_g1 = DenseMatrix(batch.g1.rows(), batch.g1.cols());
  out.grad_g2 = DenseMatrix(batch.g2.rows(), batch.g2.cols());
  out.distances.resize(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto a = batch.g1.row(i);
    const auto b = batch.g2.row(i);
    const double d = distance(a, b);
    out.distances[i] = d;
    out.loss += pair_loss(d, batch.labels[i], m);
    const double dl_dd = loss_grad_wrt_distance(d, batch.labels[i], m) * scale;
    if (dl_dd == 0.0) continue;
    const auto [da, db] = distance_grad(a, b);
    auto ga = out.grad_g1.row(i);
    auto gb = out.grad_g2.row(i);
    for (std::size_t k = 0; k < a.size(); ++k) {
      ga[k] = dl_dd * da[k];
      gb[k] = dl_dd * db[k];
    }
  }
  out.loss *= scale;
  return out;
}

}  // namespace revfraud::contrastive
