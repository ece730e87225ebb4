#pragma once

#include <span>
#include <utility>
#include <vector>

#include "revfraud/ndmath/matrix.hpp"

namespace revfraud::contrastive {

using ndmath::DenseMatrix;

/// Positive radius inside which dissimilar pairs still contribute loss.
class Margin {
 public:
  explicit Margin(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

enum class Reduction { sum, mean };

/// Branch outputs for P pairs: row i of g1 and g2 belong to pair i, whose
/// label is 0 (genuine, similar) or 1 (fraudulent, dissimilar).
struct PairBatch {
  DenseMatrix g1;
  DenseMatrix g2;
  std::vector<int> labels;
};

/// Euclidean distance ||g1 - g2||.
double distance(std::span<const double> g1, std::span<const double> g2);

/// 0.5 * D^2
double loss_similar(double d);

/// 0.5 * max(0, m - D)^2
double loss_dissimilar(double d, Margin m);

/// (1 - Y) * L_S(D) + Y * L_D(D) for a single pair.
double pair_loss(double d, int label, Margin m);

double contrastive_loss(const PairBatch& batch, Margin m, Reduction reduction);

/// dL/dD: D for genuine pairs; -(m - D) for fraudulent pairs with D <= m;
/// 0 for fraudulent pairs beyond the margin.
double loss_grad_wrt_distance(double d, int label, Margin m);

/// (dD/dg1, dD/dg2). Zero vectors when g1 == g2.
std::pair<std::vector<double>, std::vector<double>> distance_grad(std::span<const double> g1,
                                                                  std::span<const double> g2);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> distances;
  DenseMatrix grad_g1;
  DenseMatrix grad_g2;
};

/// Loss plus gradients with respect to every entry of g1 and g2, obtained by
/// chaining loss_grad_wrt_distance through distance_grad per pair.
LossAndGrad contrastive_loss_and_grad(const PairBatch& batch, Margin m, Reduction reduction);

}  // namespace revfraud::contrastive
