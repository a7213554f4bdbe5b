#include "ls3/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "ls3/adam.hpp"
#include "ls3/losses.hpp"

namespace ls3 {

DynamicsEnsemble DynamicsEnsemble::make(const DynamicsSettings& s, Rng& rng) {
  if (s.ensemble_size == 0) throw std::invalid_argument("dynamics ensemble needs at least one member");
  if (s.action_scale <= 0) throw std::invalid_argument("dynamics action_scale must be > 0");
  DynamicsEnsemble e;
  e.latent_dim_ = s.latent_dim;
  e.action_dim_ = s.action_dim;
  e.action_scale_ = s.action_scale;
  const MlpSpec spec{s.latent_dim + s.action_dim, s.hidden_dims, s.latent_dim, s.activation, Head::gaussian};
  for (std::size_t m = 0; m < s.ensemble_size; ++m) e.members_.push_back(make_mlp(spec, rng));
  return e;
}

Tensor DynamicsEnsemble::member_input(const Tensor& z, const Tensor& a) const {
  if (z.rank() != 2 || z.cols() != latent_dim_) {
    throw std::invalid_argument("dynamics: latent batch " + shape_string(z.shape()) + " does not match d=" +
                                std::to_string(latent_dim_));
  }
  if (a.rank() != 2 || a.cols() != action_dim_ || a.rows() != z.rows()) {
    throw std::invalid_argument("dynamics: action batch " + shape_string(a.shape()) +
                                " does not match latent batch");
  }
  Tensor scaled = a;
  for (auto& v : scaled.data()) v /= action_scale_;
  return concat_cols(z, scaled);
}

std::pair<Tensor, Tensor> DynamicsEnsemble::predict(std::size_t member, const Tensor& z, const Tensor& a) const {
  auto [delta, var] = split_gaussian(mlp_forward(members_.at(member), member_input(z, a)));
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += z[i];
  return {std::move(delta), std::move(var)};
}

namespace {

Tensor displacement(const LatentTransitionBatch& batch) {
  require_same_shape(batch.z, batch.z_next, "dynamics batch z/z_next");
  Tensor d = batch.z_next;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= batch.z[i];
  return d;
}

}  // namespace

std::vector<double> dyn_train_step(DynamicsEnsemble& ensemble, const LatentTransitionBatch& batch, double lr,
                                   Rng& rng) {
  const std::size_t n = batch.z.rows();
  if (n == 0) throw std::invalid_argument("dyn_train_step: empty batch");
  const Tensor input = ensemble.member_input(batch.z, batch.action);
  const Tensor target = displacement(batch);
  const AdamConfig adam{lr};
  std::vector<double> losses;
  std::vector<std::size_t> idx(n);
  for (auto& member : ensemble.members()) {
    for (auto& i : idx) i = rng.index(n);
    const Tensor x = input.gather_rows(idx);
    const Tensor y = target.gather_rows(idx);
    MlpTape tape;
    auto [mean, var] = split_gaussian(mlp_forward(member, x, &tape));
    const GaussianNll nll = loss_gaussian_nll(mean, var, y);
    const auto grads = mlp_backward(member, tape, join_gaussian(nll.grad_mean, nll.grad_variance));
    adam_step(member.params, grads.params, adam);
    losses.push_back(nll.value);
  }
  return losses;
}

std::vector<double> dyn_evaluate_nll(const DynamicsEnsemble& ensemble, const LatentTransitionBatch& batch) {
  const Tensor input = ensemble.member_input(batch.z, batch.action);
  const Tensor target = displacement(batch);
  std::vector<double> out;
  for (const auto& member : ensemble.members()) {
    auto [mean, var] = split_gaussian(mlp_forward(member, input));
    out.push_back(loss_gaussian_nll(mean, var, target).value);
  }
  return out;
}

Tensor ts1_step(const DynamicsEnsemble& ensemble, const Tensor& z, const Tensor& actions,
                std::span<const std::size_t> members, const Tensor& noise, double noise_scale) {
  const std::size_t n = z.rows(), d = ensemble.latent_dim();
  if (members.size() != n) throw std::invalid_argument("ts1_step: one member index per row required");
  require_same_shape(z, noise, "ts1_step noise");
  for (std::size_t i = 0; i < n; ++i) {
    if (members[i] >= ensemble.size()) throw std::invalid_argument("ts1_step: member index out of range");
  }
  Tensor next({n, d});
  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    rows.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (members[i] == m) rows.push_back(i);
    }
    if (rows.empty()) continue;
    const Tensor zm = z.gather_rows(rows);
    const Tensor am = actions.gather_rows(rows);
    const auto [mean, var] = ensemble.predict(m, zm, am);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto dst = next.row(rows[k]);
      auto eps = noise.row(rows[k]);
      for (std::size_t j = 0; j < d; ++j) {
        dst[j] = mean(k, j) + noise_scale * std::sqrt(var(k, j)) * eps[j];
      }
    }
  }
  return next;
}

Tensor ts1_rollout(const DynamicsEnsemble& ensemble, const Tensor& z0, const Tensor& actions, Rng& rng,
                   const Ts1Options& options) {
  const std::size_t p = z0.rows(), d = ensemble.latent_dim();
  const std::size_t h = actions.rows();
  if (p == 0 || h == 0) throw std::invalid_argument("ts1_rollout: need >= 1 particle and >= 1 step");
  if (z0.cols() != d) throw std::invalid_argument("ts1_rollout: z0 has wrong latent dim");
  if (actions.cols() != ensemble.action_dim()) throw std::invalid_argument("ts1_rollout: wrong action dim");

  Tensor out({p, h + 1, d});
  auto write = [&](std::size_t step, const Tensor& z) {
    for (std::size_t i = 0; i < p; ++i) {
      std::copy(z.row(i).begin(), z.row(i).end(), out.data().begin() + static_cast<std::ptrdiff_t>((i * (h + 1) + step) * d));
    }
  };
  Tensor z = z0;
  write(0, z);
  std::vector<std::size_t> members(p);
  Tensor noise({p, d});
  for (std::size_t k = 0; k < h; ++k) {
    for (auto& m : members) m = rng.index(ensemble.size());
    for (auto& v : noise.data()) v = rng.normal();
    Tensor a({p, actions.cols()});
    for (std::size_t i = 0; i < p; ++i) std::copy(actions.row(k).begin(), actions.row(k).end(), a.row(i).begin());
    z = ts1_step(ensemble, z, a, members, noise, options.sample_noise ? 1.0 : 0.0);
    write(k + 1, z);
  }
  return out;
}

}  // namespace ls3
