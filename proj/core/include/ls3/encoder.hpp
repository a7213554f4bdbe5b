#pragma once

#include <vector>

#include "ls3/mlp.hpp"
#include "ls3/navigation.hpp"
#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

enum class EncoderMode { learned, identity };

struct EncoderSettings {
  std::size_t obs_dim = 256;
  std::size_t latent_dim = 8;
  std::vector<std::size_t> hidden_dims{128, 128};
  Activation activation = Activation::relu;
  double beta = 1e-6;
  bool sigmoid_decoder = true;  // raster observations live in [0, 1]
};

struct LatentState {
  Tensor z;  // (d)
};

/// Per-observation latent distribution: rows of mean and standard deviation.
struct EncodedBatch {
  Tensor mean;
  Tensor stddev;
};

/// Beta-VAE encoder/decoder pair. Latents handed to downstream models are the
/// VAE's codes standardized with a per-coordinate shift and scale fixed after
/// training; identity mode passes observations through untouched.
class EncoderModel {
 public:
  static EncoderModel identity(std::size_t obs_dim);
  static EncoderModel learned(const EncoderSettings& settings, Rng& rng);

  EncoderMode mode() const noexcept { return mode_; }
  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::size_t obs_dim() const noexcept { return obs_dim_; }
  double beta() const noexcept { return beta_; }
  void set_beta(double beta);

  EncodedBatch encode_batch(const Tensor& observations) const;
  LatentState encode(const Observation& obs, Rng& rng, bool stochastic) const;
  /// Decodes standardized latents (N, d) back to flat observations (N, obs_dim).
  Tensor decode(const Tensor& latents) const;

  /// Recomputes the standardization from the VAE means of `observations`.
  void fit_normalization(const Tensor& observations);

  Mlp& encoder_net() { return encoder_; }
  Mlp& decoder_net() { return decoder_; }
  const Mlp& encoder_net() const { return encoder_; }
  const Mlp& decoder_net() const { return decoder_; }
  Tensor& latent_shift() { return shift_; }
  Tensor& latent_scale() { return scale_; }
  const Tensor& latent_shift() const { return shift_; }
  const Tensor& latent_scale() const { return scale_; }

 private:
  EncoderMode mode_ = EncoderMode::identity;
  std::size_t obs_dim_ = 0;
  std::size_t latent_dim_ = 0;
  double beta_ = 0.0;
  Mlp encoder_;
  Mlp decoder_;
  Tensor shift_;
  Tensor scale_;
};

struct VaeEpochLoss {
  double recon = 0.0;  // mean reconstruction MSE over batches
  double kl = 0.0;     // mean unweighted KL over batches
  std::size_t batches = 0;
};

struct VaeTrainOptions {
  std::size_t batch_size = 256;
  double lr = 1e-4;
  bool augment_shift = false;
  std::size_t raster_side = 0;  // needed when augment_shift is on
};

struct VaeLossGrad {
  double loss = 0.0;  // recon + beta * kl
  double recon = 0.0;
  double kl = 0.0;
  std::vector<Tensor> encoder;  // aligned with encoder_net().params
  std::vector<Tensor> decoder;
};

/// Reparameterized VAE objective for a fixed noise draw `eps` (N, d) and its
/// parameter gradients.
VaeLossGrad vae_loss_grad(const EncoderModel& model, const Tensor& x, const Tensor& eps);

/// One shuffled pass of minibatch Adam on MSE reconstruction + beta * KL.
VaeEpochLoss train_vae_epoch(EncoderModel& model, const Tensor& observations,
                             const VaeTrainOptions& options, Rng& rng);

/// Translates each square raster in the batch by a random offset in
/// {-1, 0, 1}^2 cells, filling vacated cells with zeros.
Tensor shift_augment(const Tensor& observations, std::size_t side, Rng& rng);

/// Mean reconstruction MSE of deterministic encode/decode over `observations`.
double reconstruction_mse(const EncoderModel& model, const Tensor& observations);

/// Stacks observations into an (N, obs_dim) batch.
Tensor stack_observations(const std::vector<const Observation*>& observations);

}  // namespace ls3
