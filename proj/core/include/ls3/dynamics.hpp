#pragma once

#include <span>
#include <vector>

#include "ls3/mlp.hpp"
#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

struct DynamicsSettings {
  std::size_t latent_dim = 8;
  std::size_t action_dim = 2;
  std::size_t ensemble_size = 5;
  std::vector<std::size_t> hidden_dims{64, 64};
  Activation activation = Activation::relu;
  double action_scale = 3.0;  // actions are divided by this before entering a member
};

/// Probabilistic ensemble over latent transitions. Each member maps
/// (z, a / action_scale) to a diagonal gaussian over the latent displacement
/// z' - z.
class DynamicsEnsemble {
 public:
  static DynamicsEnsemble make(const DynamicsSettings& settings, Rng& rng);

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  double action_scale() const noexcept { return action_scale_; }

  std::vector<Mlp>& members() noexcept { return members_; }
  const std::vector<Mlp>& members() const noexcept { return members_; }

  Tensor member_input(const Tensor& z, const Tensor& a) const;
  /// Mean and variance of z' under one member, each (N, d).
  std::pair<Tensor, Tensor> predict(std::size_t member, const Tensor& z, const Tensor& a) const;

 private:
  std::size_t latent_dim_ = 0;
  std::size_t action_dim_ = 0;
  double action_scale_ = 1.0;
  std::vector<Mlp> members_;
};

struct LatentTransitionBatch {
  Tensor z;       // (N, d)
  Tensor action;  // (N, a)
  Tensor z_next;  // (N, d)
};

/// One Adam step per member on the gaussian NLL of z' - z, each member on its
/// own bootstrap resample of `batch`. Returns the per-member NLL.
std::vector<double> dyn_train_step(DynamicsEnsemble& ensemble, const LatentTransitionBatch& batch,
                                   double lr, Rng& rng);

/// Mean per-member NLL on `batch` without updating anything.
std::vector<double> dyn_evaluate_nll(const DynamicsEnsemble& ensemble, const LatentTransitionBatch& batch);

/// Advances every row of `z` by one step: row i uses member `members[i]` and
/// z' = mean + sqrt(variance) * noise(i) (noise scaled by `noise_scale`).
Tensor ts1_step(const DynamicsEnsemble& ensemble, const Tensor& z, const Tensor& actions,
                std::span<const std::size_t> members, const Tensor& noise, double noise_scale = 1.0);

struct Ts1Options {
  bool sample_noise = true;  // false propagates member means only
};

/// TS-1 propagation of `z0` (P, d) particles through the action sequence
/// (H, a). Each particle draws a fresh uniformly random member at every step.
/// Returns a (P, H + 1, d) tensor whose slice [:, 0, :] equals z0.
Tensor ts1_rollout(const DynamicsEnsemble& ensemble, const Tensor& z0, const Tensor& actions, Rng& rng,
                   const Ts1Options& options = {});

}  // namespace ls3
