#pragma once

#include <vector>

#include "ls3/mlp.hpp"

namespace ls3 {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam update of every parameter in `params`. Throws if any
/// gradient is non-finite or mis-shaped, naming the parameter; nothing is
/// modified in that case.
void adam_step(ParamBlock& params, const std::vector<Tensor>& grads, const AdamConfig& config);

}  // namespace ls3
