#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "revfraud/ndmath/matrix.hpp"
#include "revfraud/ndmath/rng.hpp"

namespace revfraud::ndmath {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

enum class LayerKind : std::uint8_t { linear = 0, relu = 1, batchnorm = 2, dropout = 3 };

const char* to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  double dropout_rate = 0.0;

  static LayerSpec linear(std::size_t in, std::size_t out) { return {LayerKind::linear, in, out, 0.0}; }
  static LayerSpec relu(std::size_t dim) { return {LayerKind::relu, dim, dim, 0.0}; }
  static LayerSpec batchnorm(std::size_t dim) { return {LayerKind::batchnorm, dim, dim, 0.0}; }
  static LayerSpec dropout(std::size_t dim, double rate) { return {LayerKind::dropout, dim, dim, rate}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Throws ConfigError unless the specs form a non-empty chain of valid layers.
void validate_specs(std::span<const LayerSpec> specs);

/// Parameters of one layer. Linear layers use `weight` (out x in) and `bias`
/// (1 x out). Batch-norm layers use `weight` as the scale, `bias` as the shift
/// and keep running statistics; relu and dropout hold nothing.
struct LayerParams {
  DenseMatrix weight;
  DenseMatrix bias;
  DenseMatrix running_mean;
  DenseMatrix running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct MlpParams {
  std::vector<LayerSpec> specs;
  std::vector<LayerParams> layers;
  // Bumped whenever parameters change; forward tapes are bound to a revision.
  std::uint64_t revision = 0;

  std::size_t input_dim() const { return specs.front().in_dim; }
  std::size_t output_dim() const { return specs.back().out_dim; }

  // Value equality; the revision counter is bookkeeping and not compared.
  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    return a.specs == b.specs && a.layers == b.layers;
  }
};

MlpParams init_params(std::vector<LayerSpec> specs, std::uint64_t seed);
MlpParams init_params(std::vector<LayerSpec> specs, Rng& rng);

/// Trainable tensors in a fixed order: for each linear or batch-norm layer,
/// weight then bias. Gradients returned by mlp_backward follow the same order.
std::vector<DenseMatrix*> trainable_tensors(MlpParams& params);
std::vector<const DenseMatrix*> trainable_tensors(const MlpParams& params);
std::vector<DenseMatrix> zero_gradients(const MlpParams& params);
std::size_t parameter_count(const MlpParams& params);

enum class Mode { train, eval };

struct LayerCache {
  DenseMatrix input;       // linear, relu
  DenseMatrix normalized;  // batchnorm
  DenseMatrix mask;        // dropout (train mode)
  std::vector<double> inv_std;
  std::vector<double> batch_mean;
  std::vector<double> batch_var;
};

struct ForwardTape {
  const MlpParams* params = nullptr;
  std::uint64_t revision = 0;
  Mode mode = Mode::eval;
  std::size_t batch = 0;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  DenseMatrix output;
  ForwardTape tape;
};

/// Runs a batch (one sample per row) through the layer stack. Does not modify
/// `params`; batch-norm running statistics are folded in separately by
/// update_running_statistics.
ForwardResult mlp_forward(const MlpParams& params, const DenseMatrix& input, Mode mode, Rng& rng);

/// Single-sample convenience; eval mode needs no randomness.
std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input);

struct BackwardResult {
  std::vector<DenseMatrix> param_grads;
  DenseMatrix input_grad;
};

BackwardResult mlp_backward(const ForwardTape& tape, const MlpParams& params, const DenseMatrix& grad_output,
                            bool need_input_grad = true);

/// Exponential moving average update of batch-norm running statistics from a
/// train-mode tape.
void update_running_statistics(MlpParams& params, const ForwardTape& tape);

}  // namespace revfraud::ndmath
