#include <cmath>

#include "heatpinn/autodiff.hpp"
#include "heatpinn/errors.hpp"

namespace heatpinn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double learning_rate) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ContractError("adam_step: parameter, gradient and moment lengths differ");
  }
  if (!(learning_rate > 0)) throw ContractError("adam_step: learning_rate must be > 0");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    params[i] -= learning_rate * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
  }
}

}  // namespace heatpinn
