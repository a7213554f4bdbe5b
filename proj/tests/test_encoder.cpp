#include <stdexcept>

#include "doctest.h"
#include "oracle.hpp"

#include "ls3/encoder.hpp"

using namespace ls3;

TEST_SUITE("encoder") {

TEST_CASE("identity mode is an exact pass-through") {
  EncoderModel e = EncoderModel::identity(3);
  Rng rng(0);
  Observation o = Tensor::vector({1.25, -7.0, 1e9});
  CHECK(e.encode(o, rng, true).z.values() == o.values());
  auto b = e.encode_batch(Tensor::matrix(1, 3, {1.25, -7.0, 1e9}));
  CHECK(b.mean.values() == o.values());
  for (double s : b.stddev.data()) CHECK(s == 0.0);
  e.fit_normalization(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(e.encode(o, rng, false).z.values() == o.values());
  CHECK(e.latent_dim() == 3);
}

TEST_CASE("learned encoder shapes and deterministic means") {
  Rng rng(1);
  EncoderSettings s;
  s.obs_dim = 16;
  s.latent_dim = 4;
  s.hidden_dims = {8};
  EncoderModel e = EncoderModel::learned(s, rng);
  Observation o(std::vector<std::size_t>{4, 4}, 0.3);
  auto a = e.encode(o, rng, false).z;
  auto b = e.encode(o, rng, false).z;
  CHECK(a.size() == 4);
  CHECK(a == b);
  CHECK(e.decode(a.reshaped({1, 4})).cols() == 16);
}

TEST_CASE("vae objective gradient against finite differences") {
  Rng rng(2);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    auto g = oracle::check_vae_case(act, rng, 1e-5, 1e-4);
    CHECK(g.fraction() >= 0.95);
  }
}

TEST_CASE("vae training lowers reconstruction error") {
  Rng rng(3);
  EncoderSettings s;
  s.obs_dim = 16;
  s.latent_dim = 2;
  s.hidden_dims = {16};
  EncoderModel e = EncoderModel::learned(s, rng);
  // two prototype images
  Tensor x({64, 16});
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 16; ++c) x(r, c) = (r % 2 == 0) == (c < 8) ? 1.0 : 0.0;
  const double before = reconstruction_mse(e, x);
  VaeTrainOptions opt;
  opt.batch_size = 16;
  opt.lr = 1e-2;
  for (int ep = 0; ep < 60; ++ep) train_vae_epoch(e, x, opt, rng);
  CHECK(reconstruction_mse(e, x) < 0.5 * before);
}

TEST_CASE("normalization standardizes the latent means") {
  Rng rng(4);
  EncoderSettings s;
  s.obs_dim = 4;
  s.latent_dim = 2;
  s.hidden_dims = {6};
  EncoderModel e = EncoderModel::learned(s, rng);
  Tensor x = oracle::random_tensor({200, 4}, rng, 0.0, 1.0);
  e.fit_normalization(x);
  auto m = e.encode_batch(x).mean;
  for (std::size_t j = 0; j < 2; ++j) {
    double mu = 0, sq = 0;
    for (std::size_t r = 0; r < 200; ++r) mu += m(r, j) / 200.0;
    for (std::size_t r = 0; r < 200; ++r) sq += (m(r, j) - mu) * (m(r, j) - mu) / 200.0;
    CHECK(mu == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    CHECK(sq == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("shift augmentation moves mass by at most one cell") {
  Rng rng(5);
  Tensor x({1, 9}, 0.0);
  x(0, 4) = 1.0;  // centre of a 3x3 image
  for (int k = 0; k < 20; ++k) {
    Tensor y = shift_augment(x, 3, rng);
    double total = 0;
    for (double v : y.data()) total += v;
    CHECK(total == 1.0);
  }
}

}
