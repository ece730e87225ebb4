#include "revfraud/ndmath/mlp.hpp"

#include <cmath>
#include <string>

#include "revfraud/errors.hpp"

namespace revfraud::ndmath {

namespace {

bool has_params(LayerKind kind) { return kind == LayerKind::linear || kind == LayerKind::batchnorm; }

void check_finite_input(const DenseMatrix& input) {
  if (!input.all_finite()) throw DataError("mlp_forward: input contains NaN or Inf");
}

}  // namespace

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::linear:
      return "linear";
    case LayerKind::relu:
      return "relu";
    case LayerKind::batchnorm:
      return "batchnorm";
    case LayerKind::dropout:
      return "dropout";
  }
  return "unknown";
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("layer list is empty");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (s.in_dim == 0 || s.out_dim == 0) {
      throw ConfigError("layer " + std::to_string(i) + ": zero dimension");
    }
    if (s.kind != LayerKind::linear && s.in_dim != s.out_dim) {
      throw ConfigError("layer " + std::to_string(i) + " (" + to_string(s.kind) + ") must preserve width");
    }
    if (s.kind == LayerKind::dropout && !(s.dropout_rate >= 0.0 && s.dropout_rate < 1.0)) {
      throw ConfigError("layer " + std::to_string(i) + ": dropout rate must lie in [0, 1)");
    }
    if (i > 0 && specs[i - 1].out_dim != s.in_dim) {
      throw ConfigError("layer " + std::to_string(i) + ": input width " + std::to_string(s.in_dim) +
                        " does not chain with previous output " + std::to_string(specs[i - 1].out_dim));
    }
  }
}

MlpParams init_params(std::vector<LayerSpec> specs, std::uint64_t seed) {
  Rng rng(seed);
  return init_params(std::move(specs), rng);
}

MlpParams init_params(std::vector<LayerSpec> specs, Rng& rng) {
  validate_specs(specs);
  MlpParams params;
  params.layers.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    LayerParams& layer = params.layers[i];
    if (s.kind == LayerKind::linear) {
      const double bound = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
      layer.weight = DenseMatrix(s.out_dim, s.in_dim);
      for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
      layer.bias = DenseMatrix(1, s.out_dim, 0.0);
    } else if (s.kind == LayerKind::batchnorm) {
      layer.weight = DenseMatrix(1, s.out_dim, 1.0);
      layer.bias = DenseMatrix(1, s.out_dim, 0.0);
      layer.running_mean = DenseMatrix(1, s.out_dim, 0.0);
      layer.running_var = DenseMatrix(1, s.out_dim, 1.0);
    }
  }
  params.specs = std::move(specs);
  return params;
}

std::vector<DenseMatrix*> trainable_tensors(MlpParams& params) {
  std::vector<DenseMatrix*> out;
  for (std::size_t i = 0; i < params.specs.size(); ++i) {
    if (!has_params(params.specs[i].kind)) continue;
    out.push_back(&params.layers[i].weight);
    out.push_back(&params.layers[i].bias);
  }
  return out;
}

std::vector<const DenseMatrix*> trainable_tensors(const MlpParams& params) {
  std::vector<const DenseMatrix*> out;
  for (std::size_t i = 0; i < params.specs.size(); ++i) {
    if (!has_params(params.specs[i].kind)) continue;
    out.push_back(&params.layers[i].weight);
    out.push_back(&params.layers[i].bias);
  }
  return out;
}

std::vector<DenseMatrix> zero_gradients(const MlpParams& params) {
  std::vector<DenseMatrix> out;
  for (const DenseMatrix* t : trainable_tensors(params)) out.emplace_back(t->rows(), t->cols());
  return out;
}

std::size_t parameter_count(const MlpParams& params) {
  std::size_t n = 0;
  for (const DenseMatrix* t : trainable_tensors(params)) n += t->size();
  return n;
}

ForwardResult mlp_forward(const MlpParams& params, const DenseMatrix& input, Mode mode, Rng& rng) {
  if (params.specs.empty()) throw ContractError("mlp_forward: empty network");
  if (input.cols() != params.input_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(input.cols()) + " != " +
                     std::to_string(params.input_dim()));
  }
  if (input.rows() == 0) throw ShapeError("mlp_forward: empty batch");
  check_finite_input(input);

  ForwardResult result;
  ForwardTape& tape = result.tape;
  tape.params = &params;
  tape.revision = params.revision;
  tape.mode = mode;
  tape.batch = input.rows();
  tape.layers.resize(params.specs.size());

  const std::size_t batch = input.rows();
  DenseMatrix current = input;
  for (std::size_t li = 0; li < params.specs.size(); ++li) {
    const LayerSpec& spec = params.specs[li];
    const LayerParams& lp = params.layers[li];
    LayerCache& cache = tape.layers[li];
    switch (spec.kind) {
      case LayerKind::linear: {
        DenseMatrix out;
        affine_forward(current, lp.weight, lp.bias, out);
        cache.input = std::move(current);
        current = std::move(out);
        break;
      }
      case LayerKind::relu: {
        cache.input = current;
        for (double& v : current.data()) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::batchnorm: {
        const std::size_t dim = spec.out_dim;
        cache.inv_std.assign(dim, 0.0);
        cache.normalized = DenseMatrix(batch, dim);
        if (mode == Mode::train) {
          cache.batch_mean.assign(dim, 0.0);
          cache.batch_var.assign(dim, 0.0);
          for (std::size_t n = 0; n < batch; ++n) {
            const auto r = current.row(n);
            for (std::size_t c = 0; c < dim; ++c) cache.batch_mean[c] += r[c];
          }
          for (double& m : cache.batch_mean) m /= static_cast<double>(batch);
          for (std::size_t n = 0; n < batch; ++n) {
            const auto r = current.row(n);
            for (std::size_t c = 0; c < dim; ++c) {
              const double d = r[c] - cache.batch_mean[c];
              cache.batch_var[c] += d * d;
            }
          }
          for (std::size_t c = 0; c < dim; ++c) {
            cache.batch_var[c] /= static_cast<double>(batch);
            cache.inv_std[c] = 1.0 / std::sqrt(cache.batch_var[c] + kBatchNormEpsilon);
          }
          for (std::size_t n = 0; n < batch; ++n) {
            auto r = current.row(n);
            auto z = cache.normalized.row(n);
            for (std::size_t c = 0; c < dim; ++c) {
              z[c] = (r[c] - cache.batch_mean[c]) * cache.inv_std[c];
              r[c] = lp.weight(0, c) * z[c] + lp.bias(0, c);
            }
          }
        } else {
          for (std::size_t c = 0; c < dim; ++c) {
            cache.inv_std[c] = 1.0 / std::sqrt(lp.running_var(0, c) + kBatchNormEpsilon);
          }
          for (std::size_t n = 0; n < batch; ++n) {
            auto r = current.row(n);
            auto z = cache.normalized.row(n);
            for (std::size_t c = 0; c < dim; ++c) {
              z[c] = (r[c] - lp.running_mean(0, c)) * cache.inv_std[c];
              r[c] = lp.weight(0, c) * z[c] + lp.bias(0, c);
            }
          }
        }
        break;
      }
      case LayerKind::dropout: {
        if (mode == Mode::train && spec.dropout_rate > 0.0) {
          const double keep = 1.0 - spec.dropout_rate;
          const double scale = 1.0 / keep;
          cache.mask = DenseMatrix(batch, spec.out_dim);
          auto mask = cache.mask.data();
          auto values = current.data();
          for (std::size_t i = 0; i < mask.size(); ++i) {
            mask[i] = rng.bernoulli(keep) ? scale : 0.0;
            values[i] *= mask[i];
          }
        }
        break;
      }
    }
  }
  result.output = std::move(current);
  return result;
}

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> input) {
  Rng unused(0);
  ForwardResult r = mlp_forward(params, DenseMatrix::row_vector(input), Mode::eval, unused);
  const auto out = r.output.row(0);
  return {out.begin(), out.end()};
}

BackwardResult mlp_backward(const ForwardTape& tape, const MlpParams& params, const DenseMatrix& grad_output,
                            bool need_input_grad) {
  if (tape.params != &params || tape.revision != params.revision) {
    throw ContractError("mlp_backward: tape was produced by a different or since-modified parameter set");
  }
  if (tape.layers.size() != params.specs.size()) {
    throw ContractError("mlp_backward: tape length does not match layer count");
  }
  if (grad_output.rows() != tape.batch || grad_output.cols() != params.output_dim()) {
    throw ContractError("mlp_backward: grad_output shape does not match forward output");
  }

  BackwardResult result;
  result.param_grads = zero_gradients(params);
  // Gradient slots are laid out per parameterised layer in order; walk them backwards.
  std::size_t slot = result.param_grads.size();

  const std::size_t batch = tape.batch;
  DenseMatrix grad = grad_output;
  for (std::size_t li = params.specs.size(); li-- > 0;) {
    const LayerSpec& spec = params.specs[li];
    const LayerParams& lp = params.layers[li];
    const LayerCache& cache = tape.layers[li];
    const bool first_layer = li == 0;
    switch (spec.kind) {
      case LayerKind::linear: {
        slot -= 2;
        DenseMatrix& gw = result.param_grads[slot];
        DenseMatrix& gb = result.param_grads[slot + 1];
        for (std::size_t n = 0; n < batch; ++n) {
          const auto gy = grad.row(n);
          const auto x = cache.input.row(n);
          for (std::size_t o = 0; o < spec.out_dim; ++o) {
            const double g = gy[o];
            gb(0, o) += g;
            if (g == 0.0) continue;
            auto gwr = gw.row(o);
            for (std::size_t i = 0; i < spec.in_dim; ++i) gwr[i] += g * x[i];
          }
        }
        if (first_layer && !need_input_grad) {
          grad = DenseMatrix();
          break;
        }
        DenseMatrix gx(batch, spec.in_dim);
        for (std::size_t n = 0; n < batch; ++n) {
          const auto gy = grad.row(n);
          auto gxr = gx.row(n);
          for (std::size_t o = 0; o < spec.out_dim; ++o) {
            const double g = gy[o];
            if (g == 0.0) continue;
            const auto wr = lp.weight.row(o);
            for (std::size_t i = 0; i < spec.in_dim; ++i) gxr[i] += g * wr[i];
          }
        }
        grad = std::move(gx);
        break;
      }
      case LayerKind::relu: {
        auto g = grad.data();
        const auto x = cache.input.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!(x[i] > 0.0)) g[i] = 0.0;
        }
        break;
      }
      case LayerKind::batchnorm: {
        slot -= 2;
        DenseMatrix& gscale = result.param_grads[slot];
        DenseMatrix& gshift = result.param_grads[slot + 1];
        const std::size_t dim = spec.out_dim;
        std::vector<double> sum_g(dim, 0.0);
        std::vector<double> sum_gz(dim, 0.0);
        for (std::size_t n = 0; n < batch; ++n) {
          const auto gy = grad.row(n);
          const auto z = cache.normalized.row(n);
          for (std::size_t c = 0; c < dim; ++c) {
            sum_g[c] += gy[c];
            sum_gz[c] += gy[c] * z[c];
          }
        }
        for (std::size_t c = 0; c < dim; ++c) {
          gscale(0, c) = sum_gz[c];
          gshift(0, c) = sum_g[c];
        }
        const double nb = static_cast<double>(batch);
        for (std::size_t n = 0; n < batch; ++n) {
          auto gy = grad.row(n);
          const auto z = cache.normalized.row(n);
          for (std::size_t c = 0; c < dim; ++c) {
            const double k = lp.weight(0, c) * cache.inv_std[c];
            if (tape.mode == Mode::train) {
              gy[c] = k * (gy[c] - sum_g[c] / nb - z[c] * sum_gz[c] / nb);
            } else {
              gy[c] = k * gy[c];
            }
          }
        }
        break;
      }
      case LayerKind::dropout: {
        if (!cache.mask.empty()) {
          auto g = grad.data();
          const auto m = cache.mask.data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] *= m[i];
        }
        break;
      }
    }
  }
  result.input_grad = std::move(grad);
  return result;
}

void update_running_statistics(MlpParams& params, const ForwardTape& tape) {
  if (tape.params != &params || tape.revision != params.revision) {
    throw ContractError("update_running_statistics: tape does not belong to these parameters");
  }
  if (tape.mode != Mode::train) return;
  for (std::size_t li = 0; li < params.specs.size(); ++li) {
    if (params.specs[li].kind != LayerKind::batchnorm) continue;
    const LayerCache& cache = tape.layers[li];
    LayerParams& lp = params.layers[li];
    // Running variance tracks the unbiased batch estimate.
    const double n = static_cast<double>(tape.batch);
    const double correction = tape.batch > 1 ? n / (n - 1.0) : 1.0;
    for (std::size_t c = 0; c < params.specs[li].out_dim; ++c) {
      lp.running_mean(0, c) =
          (1.0 - kBatchNormMomentum) * lp.running_mean(0, c) + kBatchNormMomentum * cache.batch_mean[c];
      lp.running_var(0, c) =
          (1.0 - kBatchNormMomentum) * lp.running_var(0, c) + kBatchNormMomentum * cache.batch_var[c] * correction;
    }
  }
  ++params.revision;
}

}  // namespace revfraud::ndmath
