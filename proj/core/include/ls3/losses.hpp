#pragma once

#include "ls3/mlp.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

inline constexpr double kProbabilityClip = 1e-6;

struct LossGrad {
  double value = 0.0;
  Tensor grad;
};

/// Mean over batch and coordinates of the squared difference.
LossGrad loss_mse(const Tensor& pred, const Tensor& target);

/// Binary cross entropy averaged over the batch. Probabilities are clipped to
/// [1e-6, 1 - 1e-6]; labels may be soft but must lie in [0, 1].
LossGrad loss_bce(const Tensor& prob, const Tensor& label);

struct GaussianNll {
  double value = 0.0;
  Tensor grad_mean;
  Tensor grad_variance;
};

/// Negative log-likelihood of `target` under N(mean, diag(variance)), summed
/// over coordinates and averaged over the batch.
GaussianNll loss_gaussian_nll(const Tensor& mean, const Tensor& variance, const Tensor& target,
                              double variance_floor = kVarianceFloor);

struct KlDivergence {
  double value = 0.0;
  Tensor grad_mu;
  Tensor grad_log_var;
};

/// KL(N(mu, exp(log_var)) || N(0, I)) summed over coordinates, averaged over the batch.
KlDivergence loss_kl_diag_gaussian(const Tensor& mu, const Tensor& log_var);

}  // namespace ls3
