#include "revfraud/ndmath/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "revfraud/errors.hpp"
#include "revfraud/ndmath/rng.hpp"

namespace revfraud::ndmath {

GradCheckReport grad_check(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> analytic,
                           const std::function<double()>& loss, std::size_t probes, double eps,
                           std::uint64_t seed) {
  if (params.size() != analytic.size()) throw ContractError("grad_check: gradient list length mismatch");
  std::vector<std::size_t> offsets(params.size() + 1, 0);
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t]->same_shape(analytic[t])) throw ContractError("grad_check: gradient shape mismatch");
    offsets[t + 1] = offsets[t] + params[t]->size();
  }
  const std::size_t total = offsets.back();

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  Rng rng(seed);
  const std::size_t count = std::min(probes, total);
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(total - i);
    std::swap(coords[i], coords[j]);
  }

  GradCheckReport report;
  report.probes = count;
  for (std::size_t p = 0; p < count; ++p) {
    const std::size_t flat = coords[p];
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const std::size_t t = static_cast<std::size_t>(it - offsets.begin()) - 1;
    const std::size_t idx = flat - offsets[t];

    double& value = params[t]->data()[idx];
    const double original = value;
    value = original + eps;
    const double plus = loss();
    value = original - eps;
    const double minus = loss();
    value = original;

    const double numeric = (plus - minus) / (2.0 * eps);
    const double exact = analytic[t].data()[idx];
    const double scale = std::max({1.0, std::abs(exact), std::abs(numeric)});
    double err = std::abs(exact - numeric) / scale;
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    if (err > report.max_relative_error || p == 0) {
      report.max_relative_error = err;
      report.worst_tensor = t;
      report.worst_index = idx;
    }
  }
  return report;
}

}  // namespace revfraud::ndmath
