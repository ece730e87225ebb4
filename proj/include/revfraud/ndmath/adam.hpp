#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "revfraud/ndmath/matrix.hpp"

namespace revfraud::ndmath {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<DenseMatrix> first_moment;
  std::vector<DenseMatrix> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Zero moments shaped like `params`, step 0.
AdamState make_adam_state(std::span<const DenseMatrix* const> params, const AdamConfig& config = {});

/// One bias-corrected Adam update applied in place. `grads[i]` must match the
/// shape of `*params[i]`; state moments must match as well.
void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state);

}  // namespace revfraud::ndmath
