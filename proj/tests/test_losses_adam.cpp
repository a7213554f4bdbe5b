#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "oracle.hpp"

#include "ls3/adam.hpp"
#include "ls3/losses.hpp"

using namespace ls3;

TEST_SUITE("losses_adam") {

TEST_CASE("mse against a hand value") {
  const auto l = loss_mse(Tensor::vector({1, 2}), Tensor::vector({0, 4}));
  CHECK(l.value == doctest::Approx(2.5));
  CHECK(l.grad[0] == doctest::Approx(1.0));
  CHECK(l.grad[1] == doctest::Approx(-2.0));
}

TEST_CASE("bce averages over rows and accepts soft labels") {
  Tensor p = Tensor::matrix(2, 1, {0.8, 0.4});
  Tensor y = Tensor::matrix(2, 1, {1.0, 0.15});
  const auto l = loss_bce(p, y);
  const double ref = -0.5 * (std::log(0.8) + 0.15 * std::log(0.4) + 0.85 * std::log(0.6));
  CHECK(l.value == doctest::Approx(ref).epsilon(1e-12));
  CHECK_THROWS(loss_bce(p, Tensor::matrix(2, 1, {1.2, 0.0})));
}

TEST_CASE("bce clips saturated probabilities") {
  const auto l = loss_bce(Tensor::vector({0.0}), Tensor::vector({1.0}));
  CHECK(std::isfinite(l.value));
  CHECK(l.value == doctest::Approx(-std::log(kProbabilityClip)));
}

TEST_CASE("gaussian nll matches the closed form") {
  Tensor mean = Tensor::matrix(1, 2, {0.0, 1.0});
  Tensor var = Tensor::matrix(1, 2, {0.5, 2.0});
  Tensor y = Tensor::matrix(1, 2, {0.3, -1.0});
  double ref = 0.0;
  for (int i = 0; i < 2; ++i)
    ref += 0.5 * (std::log(2 * std::numbers::pi * var[i]) + std::pow(y[i] - mean[i], 2) / var[i]);
  CHECK(loss_gaussian_nll(mean, var, y).value == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("kl vanishes at the prior and is positive elsewhere") {
  Tensor zero = Tensor::matrix(1, 3, {0, 0, 0});
  CHECK(loss_kl_diag_gaussian(zero, zero).value == doctest::Approx(0.0));
  CHECK(loss_kl_diag_gaussian(Tensor::matrix(1, 3, {0.5, 0, 0}), zero).value == doctest::Approx(0.125));
  CHECK(loss_kl_diag_gaussian(zero, Tensor::matrix(1, 3, {1.0, 0, 0})).value > 0.0);
}

TEST_CASE("loss gradients against finite differences") {
  Rng rng(11);
  Tensor a = oracle::random_tensor({3, 2}, rng, 0.1, 0.9);
  Tensor b = oracle::random_tensor({3, 2}, rng, 0.1, 0.9);
  Tensor v = oracle::random_tensor({3, 2}, rng, 0.2, 2.0);

  auto mse = loss_mse(a, b);
  CHECK(oracle::finite_difference_check([&] { return loss_mse(a, b).value; }, {&a}, {mse.grad}, 1e-6, 1e-6).fraction() == 1.0);
  auto bce = loss_bce(a, b);
  CHECK(oracle::finite_difference_check([&] { return loss_bce(a, b).value; }, {&a}, {bce.grad}, 1e-6, 1e-6).fraction() == 1.0);
  auto nll = loss_gaussian_nll(a, v, b);
  CHECK(oracle::finite_difference_check([&] { return loss_gaussian_nll(a, v, b).value; }, {&a, &v},
                                        {nll.grad_mean, nll.grad_variance}, 1e-6, 1e-6)
            .fraction() == 1.0);
  auto kl = loss_kl_diag_gaussian(a, v);
  CHECK(oracle::finite_difference_check([&] { return loss_kl_diag_gaussian(a, v).value; }, {&a, &v},
                                        {kl.grad_mu, kl.grad_log_var}, 1e-6, 1e-6)
            .fraction() == 1.0);
}

TEST_CASE("adam first two steps by hand") {
  ParamBlock p;
  p.add("w", Tensor::vector({1.0}));
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  adam_step(p, {Tensor::vector({2.0})}, cfg);
  // bias-corrected first step moves by lr * sign(g)
  CHECK(p[0].value[0] == doctest::Approx(0.9).epsilon(1e-9));
  adam_step(p, {Tensor::vector({-1.0})}, cfg);
  const double w1 = 1.0 - 0.1 * (0.2 / 0.1) / (std::sqrt(0.004 / 0.001) + 1e-8);
  const double m = 0.9 * 0.2 + 0.1 * -1.0, v = 0.999 * 0.004 + 0.001 * 1.0;
  const double step = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(p[0].value[0] == doctest::Approx(w1 - step).epsilon(1e-12));
  CHECK(p[0].adam.step_count == 2);
}

TEST_CASE("adam leaves a zero-gradient parameter in place") {
  ParamBlock p;
  p.add("w", Tensor::vector({1.0, -2.0}));
  adam_step(p, {Tensor::vector({0.0, 0.0})}, AdamConfig{});
  CHECK(p[0].value.values() == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam rejects non-finite gradients without touching anything") {
  ParamBlock p;
  p.add("a", Tensor::vector({1.0}));
  p.add("b", Tensor::vector({1.0}));
  try {
    adam_step(p, {Tensor::vector({1.0}), Tensor::vector({std::nan("")})}, AdamConfig{});
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  CHECK(p[0].value[0] == 1.0);
  CHECK(p[0].adam.step_count == 0);
}

}
