#include "ls3/classifier.hpp"

#include <algorithm>
#include <stdexcept>

#include "ls3/adam.hpp"
#include "ls3/losses.hpp"

namespace ls3 {

Classifier Classifier::make(std::size_t latent_dim, const std::vector<std::size_t>& hidden_dims,
                            Activation activation, Rng& rng) {
  return Classifier{make_mlp({latent_dim, hidden_dims, 1, activation, Head::sigmoid}, rng)};
}

Tensor Classifier::probability(const Tensor& z) const {
  Tensor out = mlp_forward(net, z);
  return out.reshaped({out.rows()});
}

double classifier_train_step(Classifier& f, const Tensor& z, std::span<const double> labels, double lr) {
  if (labels.size() != z.rows() || labels.empty()) {
    throw std::invalid_argument("classifier_train_step: need one label per row");
  }
  MlpTape tape;
  const Tensor prob = mlp_forward(f.net, z, &tape);
  const Tensor y({labels.size(), 1}, std::vector<double>(labels.begin(), labels.end()));
  const LossGrad bce = loss_bce(prob, y);
  adam_step(f.net.params, mlp_backward(f.net, tape, bce.grad).params, AdamConfig{lr});
  return bce.value;
}

double classifier_train_step(Classifier& f, const Tensor& positives, const Tensor& negatives, double lr) {
  if (positives.rows() == 0) throw std::invalid_argument("classifier_train_step: no positive examples");
  const std::size_t np = positives.rows(), nn = negatives.rows();
  Tensor z({np + nn, positives.cols()});
  std::copy(positives.data().begin(), positives.data().end(), z.data().begin());
  std::copy(negatives.data().begin(), negatives.data().end(),
            z.data().begin() + static_cast<std::ptrdiff_t>(positives.size()));
  std::vector<double> labels(np + nn, 0.0);
  std::fill_n(labels.begin(), np, 1.0);
  return classifier_train_step(f, z, labels, lr);
}

std::vector<double> safe_set_targets(const SafeSetClassifier& safe_set, const Tensor& z_next,
                                     std::span<const double> indicator) {
  if (indicator.size() != z_next.rows()) throw std::invalid_argument("safe_set_targets: size mismatch");
  const Tensor next = safe_set.classifier.probability(z_next);
  std::vector<double> out(indicator.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(1.0, std::max(indicator[i], safe_set.gamma_ss * next[i]));
  }
  return out;
}

double classifier_accuracy(const Classifier& f, const Tensor& z, std::span<const double> labels) {
  const Tensor p = f.probability(z);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += (p[i] >= 0.5) == (labels[i] >= 0.5) ? 1 : 0;
  return labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace ls3
