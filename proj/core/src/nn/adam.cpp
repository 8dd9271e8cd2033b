#include "cdpauth/nn/adam.hpp"

#include <cmath>

#include "cdpauth/error.hpp"

namespace cdpauth::nn {

AdamState::AdamState(const ParameterList& params, AdamOptions opts)
    : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const Parameter* p : params) {
    first_moment.emplace_back(p->value().shape());
    second_moment.emplace_back(p->value().shape());
  }
}

void adam_step(const ParameterList& params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: state tracks " +
                     std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& value = params[k]->value();
    const Tensor& grad = params[k]->grad();
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (grad.shape() != value.shape() || m.shape() != value.shape()) {
      throw ShapeError("adam_step: shape mismatch for " + params[k]->name());
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = grad[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace cdpauth::nn
