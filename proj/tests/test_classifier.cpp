#include <stdexcept>

#include "doctest.h"
#include "oracle.hpp"

#include "ls3/classifier.hpp"

using namespace ls3;

namespace {
SafeSetClassifier half_everywhere(double gamma_ss) {
  Rng rng(0);
  SafeSetClassifier s{Classifier::make(2, {4}, Activation::relu, rng), gamma_ss};
  for (auto& p : s.classifier.net.params) p.value.fill(0.0);  // sigmoid(0) = 0.5
  return s;
}
}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("probabilities lie in the open unit interval") {
  Rng rng(1);
  auto f = Classifier::make(3, {8}, Activation::tanh, rng);
  auto p = f.probability(oracle::random_tensor({20, 3}, rng, -10, 10));
  CHECK(p.rank() == 1);
  for (double x : p.data()) CHECK((x > 0.0 && x < 1.0));
}

TEST_CASE("separable data is learned") {
  Rng rng(2);
  auto f = Classifier::make(2, {16}, Activation::relu, rng);
  Tensor pos = oracle::random_tensor({64, 2}, rng, 0.5, 2.0);
  Tensor neg = oracle::random_tensor({64, 2}, rng, -2.0, -0.5);
  for (int k = 0; k < 300; ++k) classifier_train_step(f, pos, neg, 1e-2);
  std::vector<double> labels(64, 1.0);
  CHECK(classifier_accuracy(f, pos, labels) == 1.0);
  CHECK_THROWS(classifier_train_step(f, Tensor({0, 2}), neg, 1e-2));
}

TEST_CASE("safe-set soft label example") {
  auto s = half_everywhere(0.3);
  std::vector<double> ind{0.0};
  auto t = safe_set_targets(s, Tensor::matrix(1, 2, {0.4, -0.4}), ind);
  CHECK(t[0] == 0.15);
}

TEST_CASE("safe-set labels dominate the indicator and never exceed one") {
  Rng rng(3);
  SafeSetClassifier s{Classifier::make(2, {8}, Activation::relu, rng), 0.3};
  for (int k = 0; k < 10; ++k) {
    Tensor z = oracle::random_tensor({50, 2}, rng, -3, 3);
    std::vector<double> ind(50);
    for (auto& x : ind) x = rng.uniform() < 0.3 ? 1.0 : 0.0;
    auto t = safe_set_targets(s, z, ind);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(t[i] >= ind[i]);
      CHECK(t[i] <= 1.0);
    }
  }
}

TEST_CASE("zero gamma collapses the labels to the indicator") {
  auto s = half_everywhere(0.0);
  std::vector<double> ind{0.0, 1.0, 0.0};
  auto t = safe_set_targets(s, Tensor({3, 2}, 0.1), ind);
  CHECK(t == ind);
}

}
