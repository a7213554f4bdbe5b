#pragma once

#include <span>
#include <vector>

#include "ls3/mlp.hpp"
#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

struct ValueSettings {
  std::size_t latent_dim = 8;
  std::size_t ensemble_size = 2;
  std::vector<std::size_t> hidden_dims{64, 64, 64};
  Activation activation = Activation::relu;
  double gamma = 0.99;
  int sync_period = 100;
};

/// Ensemble of value networks with a lagged target copy. Networks predict
/// V / (1 / (1 - gamma)); reads are the ensemble mean clamped to the sparse
/// reward range [-1 / (1 - gamma), 0].
class ValueEnsemble {
 public:
  static ValueEnsemble make(const ValueSettings& settings, Rng& rng);

  std::size_t size() const noexcept { return members_.size(); }
  double gamma() const noexcept { return gamma_; }
  double lower_bound() const noexcept { return -1.0 / (1.0 - gamma_); }
  double output_scale() const noexcept { return 1.0 / (1.0 - gamma_); }
  int sync_period() const noexcept { return sync_period_; }
  int updates_since_sync() const noexcept { return updates_since_sync_; }
  void set_updates_since_sync(int n);

  std::vector<Mlp>& members() noexcept { return members_; }
  const std::vector<Mlp>& members() const noexcept { return members_; }
  std::vector<Mlp>& targets() noexcept { return targets_; }
  const std::vector<Mlp>& targets() const noexcept { return targets_; }

  /// Clamped ensemble-mean value per row of z, shape (N).
  Tensor predict(const Tensor& z) const;
  /// Clamped ensemble-mean value under the target networks.
  Tensor predict_target(const Tensor& z) const;
  /// Unclamped prediction of one member, shape (N).
  Tensor member_value(std::size_t member, const Tensor& z) const;

  /// Copies current parameters into the target networks and resets the counter.
  void sync_target();
  /// Counts one TD update; syncs when the period is reached.
  void count_update();

 private:
  Tensor clamped_mean(const std::vector<Mlp>& nets, const Tensor& z) const;

  std::vector<Mlp> members_;
  std::vector<Mlp> targets_;
  double gamma_ = 0.99;
  int sync_period_ = 100;
  int updates_since_sync_ = 0;
};

/// sum_{i=1}^{n} gamma^i * rewards_after[i-1]: the discounted cost-to-go from
/// a state whose subsequent rewards are `rewards_after`.
double discounted_return(std::span<const double> rewards_after, double gamma);

/// Monte Carlo regression targets for every state of a trajectory whose
/// per-transition rewards are `rewards`; state t collects rewards[t..].
std::vector<double> value_offline_targets(std::span<const double> rewards, double gamma);

/// One Adam step per member on (V(z) - target)^2. Returns the mean loss.
double value_mc_step(ValueEnsemble& values, const Tensor& z, std::span<const double> targets, double lr);

/// Regression targets r + gamma * V_target(z') without a terminal mask.
std::vector<double> value_td_targets(const ValueEnsemble& values, std::span<const double> rewards,
                                     const Tensor& z_next);

/// One TD-1 Adam step per member against the target networks, then counts the
/// update (syncing every sync_period calls). Returns the mean loss.
double value_td_step(ValueEnsemble& values, const Tensor& z, std::span<const double> rewards,
                     const Tensor& z_next, double lr);

}  // namespace ls3
