#include "ls3/value.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ls3/adam.hpp"

namespace ls3 {

ValueEnsemble ValueEnsemble::make(const ValueSettings& s, Rng& rng) {
  if (s.ensemble_size == 0) throw std::invalid_argument("value ensemble needs at least one member");
  if (!(s.gamma >= 0.0 && s.gamma < 1.0)) throw std::invalid_argument("models.gamma must be in [0, 1)");
  if (s.sync_period < 1) throw std::invalid_argument("target sync period must be >= 1");
  ValueEnsemble v;
  v.gamma_ = s.gamma;
  v.sync_period_ = s.sync_period;
  const MlpSpec spec{s.latent_dim, s.hidden_dims, 1, s.activation, Head::linear};
  for (std::size_t m = 0; m < s.ensemble_size; ++m) v.members_.push_back(make_mlp(spec, rng));
  v.targets_ = v.members_;
  for (auto& t : v.targets_) t.params.reset_optimizer();
  return v;
}

void ValueEnsemble::set_updates_since_sync(int n) {
  if (n < 0 || n >= sync_period_) throw std::invalid_argument("updates_since_sync out of range");
  updates_since_sync_ = n;
}

Tensor ValueEnsemble::member_value(std::size_t member, const Tensor& z) const {
  const Tensor out = mlp_forward(members_.at(member), z);
  Tensor v({out.rows()});
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = out[i] * output_scale();
  return v;
}

Tensor ValueEnsemble::clamped_mean(const std::vector<Mlp>& nets, const Tensor& z) const {
  Tensor acc({z.rows()}, 0.0);
  for (const auto& net : nets) {
    const Tensor out = mlp_forward(net, z);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += out[i];
  }
  const double k = output_scale() / static_cast<double>(nets.size());
  for (auto& v : acc.data()) v = std::clamp(v * k, lower_bound(), 0.0);
  return acc;
}

Tensor ValueEnsemble::predict(const Tensor& z) const { return clamped_mean(members_, z); }
Tensor ValueEnsemble::predict_target(const Tensor& z) const { return clamped_mean(targets_, z); }

void ValueEnsemble::sync_target() {
  for (std::size_t m = 0; m < members_.size(); ++m) targets_[m].params.set_values(members_[m].params.values());
  updates_since_sync_ = 0;
}

void ValueEnsemble::count_update() {
  if (++updates_since_sync_ >= sync_period_) sync_target();
}

double discounted_return(std::span<const double> rewards_after, double gamma) {
  double total = 0.0;
  double g = gamma;
  for (double r : rewards_after) {
    total += g * r;
    g *= gamma;
  }
  return total;
}

std::vector<double> value_offline_targets(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  // Backward recursion of discounted_return: G_t = gamma * (r_t + G_{t+1}).
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    next = gamma * (rewards[t] + next);
    out[t] = next;
  }
  return out;
}

namespace {

double regress(ValueEnsemble& values, const Tensor& z, std::span<const double> targets, double lr) {
  if (targets.size() != z.rows()) throw std::invalid_argument("value regression: target count mismatch");
  const double scale = values.output_scale();
  const double n = static_cast<double>(targets.size());
  const AdamConfig adam{lr};
  double loss = 0.0;
  for (auto& net : values.members()) {
    MlpTape tape;
    const Tensor out = mlp_forward(net, z, &tape);
    Tensor grad(out.shape());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double err = out[i] * scale - targets[i];
      loss += err * err / n;
      // Gradient taken in normalized units; Adam is invariant to the constant factor.
      grad[i] = 2.0 * (out[i] - targets[i] / scale) / n;
    }
    adam_step(net.params, mlp_backward(net, tape, grad).params, adam);
  }
  return loss / static_cast<double>(values.size());
}

}  // namespace

double value_mc_step(ValueEnsemble& values, const Tensor& z, std::span<const double> targets, double lr) {
  return regress(values, z, targets, lr);
}

std::vector<double> value_td_targets(const ValueEnsemble& values, std::span<const double> rewards,
                                     const Tensor& z_next) {
  if (rewards.size() != z_next.rows()) throw std::invalid_argument("value_td_targets: size mismatch");
  const Tensor next = values.predict_target(z_next);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rewards[i] + values.gamma() * next[i];
  return out;
}

double value_td_step(ValueEnsemble& values, const Tensor& z, std::span<const double> rewards,
                     const Tensor& z_next, double lr) {
  const auto targets = value_td_targets(values, rewards, z_next);
  const double loss = regress(values, z, targets, lr);
  values.count_update();
  return loss;
}

}  // namespace ls3
