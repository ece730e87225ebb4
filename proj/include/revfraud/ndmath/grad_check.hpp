#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "revfraud/ndmath/matrix.hpp"

namespace revfraud::ndmath {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
};

/// Compares `analytic` gradients with central differences of `loss` at
/// `probes` parameter coordinates drawn without replacement (all of them when
/// there are fewer). `loss` must be deterministic; it is evaluated with the
/// probed coordinate shifted by +/- eps and the parameter is restored after.
///
/// Error per coordinate is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> analytic,
                           const std::function<double()>& loss, std::size_t probes, double eps,
                           std::uint64_t seed);

}  // namespace revfraud::ndmath
