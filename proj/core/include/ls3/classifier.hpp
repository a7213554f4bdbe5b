#pragma once

#include <span>
#include <vector>

#include "ls3/mlp.hpp"
#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

/// Latent-state binary classifier with a sigmoid head; used for the goal
/// indicator, the constraint estimator and the safe set.
struct Classifier {
  Mlp net;

  static Classifier make(std::size_t latent_dim, const std::vector<std::size_t>& hidden_dims,
                         Activation activation, Rng& rng);
  /// Probabilities in (0, 1), shape (N).
  Tensor probability(const Tensor& z) const;
};

/// One Adam step on BCE against (possibly soft) labels. Returns the loss.
double classifier_train_step(Classifier& f, const Tensor& z, std::span<const double> labels, double lr);

/// One Adam step on a batch made of `positives` labelled 1 and `negatives` labelled 0.
double classifier_train_step(Classifier& f, const Tensor& positives, const Tensor& negatives, double lr);

struct SafeSetClassifier {
  Classifier classifier;
  double gamma_ss = 0.3;
};

/// Recursive safe-set labels max(indicator, gamma_ss * f_S(z_next)), with f_S
/// evaluated as a constant (no gradient flows through the target).
std::vector<double> safe_set_targets(const SafeSetClassifier& safe_set, const Tensor& z_next,
                                     std::span<const double> indicator);

/// Fraction of rows classified correctly at threshold 0.5.
double classifier_accuracy(const Classifier& f, const Tensor& z, std::span<const double> labels);

}  // namespace ls3
