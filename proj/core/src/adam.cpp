#include "ls3/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ls3 {

void adam_step(ParamBlock& params, const std::vector<Tensor>& grads, const AdamConfig& config) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                                std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params[i].value, grads[i], "adam_step " + params[i].name);
    if (!grads[i].all_finite()) {
      throw std::invalid_argument("adam_step: non-finite gradient for parameter " + params[i].name);
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& p = params[i];
    auto& st = p.adam;
    st.step_count += 1;
    const double t = static_cast<double>(st.step_count);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    const auto& g = grads[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      double& m = st.first_moment[k];
      double& v = st.second_moment[k];
      m = config.beta1 * m + (1.0 - config.beta1) * g[k];
      v = config.beta2 * v + (1.0 - config.beta2) * g[k] * g[k];
      p.value[k] -= config.lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
    }
  }
}

}  // namespace ls3
