#include "ls3/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ls3 {

namespace {

double batch_size(const Tensor& t) { return static_cast<double>(t.rank() == 2 ? t.rows() : 1); }

}  // namespace

LossGrad loss_mse(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "loss_mse");
  if (pred.empty()) throw std::invalid_argument("loss_mse: empty input");
  const double n = static_cast<double>(pred.size());
  LossGrad out{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    out.value += diff * diff;
    out.grad[i] = 2.0 * diff / n;
  }
  out.value /= n;
  return out;
}

LossGrad loss_bce(const Tensor& prob, const Tensor& label) {
  require_same_shape(prob, label, "loss_bce");
  const double b = batch_size(prob);
  LossGrad out{0.0, Tensor(prob.shape())};
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double y = label[i];
    if (!(y >= 0.0 && y <= 1.0)) {
      throw std::invalid_argument("loss_bce: label " + std::to_string(y) + " outside [0, 1]");
    }
    const double raw = prob[i];
    const double p = std::clamp(raw, kProbabilityClip, 1.0 - kProbabilityClip);
    out.value -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    const bool clipped = raw < kProbabilityClip || raw > 1.0 - kProbabilityClip;
    out.grad[i] = clipped ? 0.0 : (-y / p + (1.0 - y) / (1.0 - p)) / b;
  }
  out.value /= b;
  return out;
}

GaussianNll loss_gaussian_nll(const Tensor& mean, const Tensor& variance, const Tensor& target,
                              double variance_floor) {
  require_same_shape(mean, target, "loss_gaussian_nll mean/target");
  require_same_shape(variance, target, "loss_gaussian_nll variance/target");
  const double b = batch_size(mean);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  GaussianNll out{0.0, Tensor(mean.shape()), Tensor(mean.shape())};
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double v = variance[i];
    if (!(v >= variance_floor)) {
      throw std::invalid_argument("loss_gaussian_nll: variance " + std::to_string(v) +
                                  " below floor " + std::to_string(variance_floor));
    }
    const double diff = target[i] - mean[i];
    out.value += 0.5 * (diff * diff / v + std::log(v) + log_2pi);
    out.grad_mean[i] = -diff / v / b;
    out.grad_variance[i] = 0.5 * (1.0 / v - diff * diff / (v * v)) / b;
  }
  out.value /= b;
  return out;
}

KlDivergence loss_kl_diag_gaussian(const Tensor& mu, const Tensor& log_var) {
  require_same_shape(mu, log_var, "loss_kl_diag_gaussian");
  if (!mu.all_finite() || !log_var.all_finite()) {
    throw std::invalid_argument("loss_kl_diag_gaussian: non-finite input");
  }
  const double b = batch_size(mu);
  KlDivergence out{0.0, Tensor(mu.shape()), Tensor(mu.shape())};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double e = std::exp(log_var[i]);
    // expm1 keeps the per-coordinate term non-negative near log_var = 0.
    out.value += 0.5 * ((std::expm1(log_var[i]) - log_var[i]) + mu[i] * mu[i]);
    out.grad_mu[i] = mu[i] / b;
    out.grad_log_var[i] = 0.5 * (e - 1.0) / b;
  }
  out.value /= b;
  return out;
}

}  // namespace ls3
