#include "revfraud/ndmath/adam.hpp"

#include <cmath>
#include <string>

#include "revfraud/errors.hpp"

namespace revfraud::ndmath {

AdamState make_adam_state(std::span<const DenseMatrix* const> params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const DenseMatrix* p : params) {
    state.first_moment.emplace_back(p->rows(), p->cols());
    state.second_moment.emplace_back(p->rows(), p->cols());
  }
  return state;
}

void adam_step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ContractError("adam_step: parameter, gradient and moment lists differ in length");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t]->same_shape(grads[t]) || !params[t]->same_shape(state.first_moment[t]) ||
        !params[t]->same_shape(state.second_moment[t])) {
      throw ContractError("adam_step: shape mismatch at tensor " + std::to_string(t));
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, step);
  const double correction2 = 1.0 - std::pow(c.beta2, step);

  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t]->data();
    const auto g = grads[t].data();
    auto m = state.first_moment[t].data();
    auto v = state.second_moment[t].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace revfraud::ndmath
