#include "ls3/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ls3/adam.hpp"
#include "ls3/losses.hpp"

namespace ls3 {

EncoderModel EncoderModel::identity(std::size_t obs_dim) {
  EncoderModel m;
  m.mode_ = EncoderMode::identity;
  m.obs_dim_ = obs_dim;
  m.latent_dim_ = obs_dim;
  return m;
}

EncoderModel EncoderModel::learned(const EncoderSettings& s, Rng& rng) {
  if (s.beta < 0) throw std::invalid_argument("latent.beta must be >= 0");
  EncoderModel m;
  m.mode_ = EncoderMode::learned;
  m.obs_dim_ = s.obs_dim;
  m.latent_dim_ = s.latent_dim;
  m.beta_ = s.beta;
  m.encoder_ = make_mlp({s.obs_dim, s.hidden_dims, s.latent_dim, s.activation, Head::gaussian}, rng);
  std::vector<std::size_t> dec_hidden(s.hidden_dims.rbegin(), s.hidden_dims.rend());
  m.decoder_ = make_mlp(
      {s.latent_dim, dec_hidden, s.obs_dim, s.activation, s.sigmoid_decoder ? Head::sigmoid : Head::linear},
      rng);
  m.shift_ = Tensor({s.latent_dim}, 0.0);
  m.scale_ = Tensor({s.latent_dim}, 1.0);
  return m;
}

void EncoderModel::set_beta(double beta) {
  if (beta < 0) throw std::invalid_argument("latent.beta must be >= 0");
  beta_ = beta;
}

EncodedBatch EncoderModel::encode_batch(const Tensor& observations) const {
  if (observations.rank() != 2 || observations.cols() != obs_dim_) {
    throw std::invalid_argument("encode: observation batch " + shape_string(observations.shape()) +
                                " does not match obs_dim " + std::to_string(obs_dim_));
  }
  if (mode_ == EncoderMode::identity) {
    return {observations, Tensor(observations.shape(), 0.0)};
  }
  auto [mu, var] = split_gaussian(mlp_forward(encoder_, observations));
  const std::size_t d = latent_dim_;
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      mu(r, j) = (mu(r, j) - shift_[j]) / scale_[j];
      var(r, j) = std::sqrt(var(r, j)) / scale_[j];
    }
  }
  return {std::move(mu), std::move(var)};
}

LatentState EncoderModel::encode(const Observation& obs, Rng& rng, bool stochastic) const {
  if (obs.size() != obs_dim_) {
    throw std::invalid_argument("encode: observation has " + std::to_string(obs.size()) +
                                " values, expected " + std::to_string(obs_dim_));
  }
  const auto enc = encode_batch(obs.reshaped({1, obs_dim_}));
  Tensor z({latent_dim_});
  for (std::size_t j = 0; j < latent_dim_; ++j) {
    z[j] = enc.mean[j];
    if (stochastic && mode_ == EncoderMode::learned) z[j] += enc.stddev[j] * rng.normal();
  }
  return {std::move(z)};
}

Tensor EncoderModel::decode(const Tensor& latents) const {
  if (latents.rank() != 2 || latents.cols() != latent_dim_) {
    throw std::invalid_argument("decode: latent batch " + shape_string(latents.shape()) +
                                " does not match latent dim " + std::to_string(latent_dim_));
  }
  if (mode_ == EncoderMode::identity) return latents;
  Tensor raw = latents;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t j = 0; j < latent_dim_; ++j) raw(r, j) = raw(r, j) * scale_[j] + shift_[j];
  }
  return mlp_forward(decoder_, raw);
}

void EncoderModel::fit_normalization(const Tensor& observations) {
  if (mode_ == EncoderMode::identity) return;
  if (observations.rows() == 0) throw std::invalid_argument("fit_normalization: no observations");
  const auto mu = split_gaussian(mlp_forward(encoder_, observations)).first;
  const std::size_t n = mu.rows(), d = latent_dim_;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += mu(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (mu(r, j) - mean) * (mu(r, j) - mean);
    var /= static_cast<double>(n);
    shift_[j] = mean;
    scale_[j] = std::max(std::sqrt(var), 1e-6);
  }
}

Tensor shift_augment(const Tensor& observations, std::size_t side, Rng& rng) {
  if (side * side != observations.cols()) {
    throw std::invalid_argument("shift_augment: rows are not " + std::to_string(side) + "x" +
                                std::to_string(side) + " rasters");
  }
  Tensor out(observations.shape(), 0.0);
  const auto s = static_cast<long>(side);
  for (std::size_t n = 0; n < observations.rows(); ++n) {
    const long dr = static_cast<long>(rng.index(3)) - 1;
    const long dc = static_cast<long>(rng.index(3)) - 1;
    auto src = observations.row(n);
    auto dst = out.row(n);
    for (long r = 0; r < s; ++r) {
      for (long c = 0; c < s; ++c) {
        const long sr = r - dr, sc = c - dc;
        if (sr < 0 || sr >= s || sc < 0 || sc >= s) continue;
        dst[static_cast<std::size_t>(r * s + c)] = src[static_cast<std::size_t>(sr * s + sc)];
      }
    }
  }
  return out;
}

VaeLossGrad vae_loss_grad(const EncoderModel& model, const Tensor& x, const Tensor& eps) {
  const std::size_t b = x.rows();
  const std::size_t d = model.latent_dim();
  const double beta = model.beta();
  MlpTape enc_tape;
  auto [mu, var] = split_gaussian(mlp_forward(model.encoder_net(), x, &enc_tape));
  require_same_shape(eps, mu, "vae_loss_grad eps");
  Tensor z({b, d});
  Tensor log_var({b, d});
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = mu[i] + std::sqrt(var[i]) * eps[i];
    log_var[i] = std::log(var[i]);
  }
  MlpTape dec_tape;
  const Tensor recon = mlp_forward(model.decoder_net(), z, &dec_tape);
  const LossGrad rec = loss_mse(recon, x);
  const KlDivergence kl = loss_kl_diag_gaussian(mu, log_var);

  MlpGradients dec_grads = mlp_backward(model.decoder_net(), dec_tape, rec.grad);
  const Tensor& dz = dec_grads.input;
  Tensor d_mu({b, d}), d_var({b, d});
  for (std::size_t i = 0; i < z.size(); ++i) {
    d_mu[i] = dz[i];
    d_var[i] = dz[i] * eps[i] * 0.5 / std::sqrt(var[i]);
    if (beta > 0.0) {
      d_mu[i] += beta * kl.grad_mu[i];
      d_var[i] += beta * kl.grad_log_var[i] / var[i];
    }
  }
  MlpGradients enc_grads = mlp_backward(model.encoder_net(), enc_tape, join_gaussian(d_mu, d_var));
  return {rec.value + beta * kl.value, rec.value, kl.value, std::move(enc_grads.params), std::move(dec_grads.params)};
}

VaeEpochLoss train_vae_epoch(EncoderModel& model, const Tensor& observations,
                             const VaeTrainOptions& options, Rng& rng) {
  if (model.mode() != EncoderMode::learned) return {};
  const std::size_t n = observations.rows();
  if (n == 0 || observations.empty()) throw std::invalid_argument("train_vae_epoch: empty dataset");
  if (options.batch_size == 0) throw std::invalid_argument("train_vae_epoch: batch_size must be >= 1");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());

  const AdamConfig adam{options.lr};
  const std::size_t d = model.latent_dim();
  VaeEpochLoss total;
  for (std::size_t start = 0; start < n; start += options.batch_size) {
    const std::size_t end = std::min(n, start + options.batch_size);
    std::span<const std::size_t> idx(order.data() + start, end - start);
    Tensor x = observations.gather_rows(idx);
    if (options.augment_shift) x = shift_augment(x, options.raster_side, rng);
    const std::size_t b = x.rows();

    Tensor eps({b, d});
    for (auto& e : eps.data()) e = rng.normal();
    const VaeLossGrad g = vae_loss_grad(model, x, eps);
    adam_step(model.decoder_net().params, g.decoder, adam);
    adam_step(model.encoder_net().params, g.encoder, adam);

    total.recon += g.recon;
    total.kl += g.kl;
    total.batches += 1;
  }
  total.recon /= static_cast<double>(total.batches);
  total.kl /= static_cast<double>(total.batches);
  return total;
}

double reconstruction_mse(const EncoderModel& model, const Tensor& observations) {
  const auto enc = model.encode_batch(observations);
  return loss_mse(model.decode(enc.mean), observations).value;
}

Tensor stack_observations(const std::vector<const Observation*>& observations) {
  if (observations.empty()) throw std::invalid_argument("stack_observations: empty");
  const std::size_t dim = observations.front()->size();
  Tensor out({observations.size(), dim});
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (observations[i]->size() != dim) throw std::invalid_argument("stack_observations: ragged");
    std::copy(observations[i]->data().begin(), observations[i]->data().end(), out.row(i).begin());
  }
  return out;
}

}  // namespace ls3
