#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

enum class Activation { relu, tanh };
enum class Head { linear, sigmoid, gaussian };

// Bounds applied to the gaussian head's variance channel after softplus.
inline constexpr double kVarianceFloor = 1e-4;
inline constexpr double kVarianceCeiling = 10.0;

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::relu;
  Head output_head = Head::linear;

  /// Width of the final affine layer; a gaussian head emits (mean, variance) pairs.
  std::size_t raw_output_dim() const noexcept {
    return output_head == Head::gaussian ? 2 * output_dim : output_dim;
  }
  void validate() const;
};

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step_count = 0;
};

struct Param {
  std::string name;
  Tensor value;
  AdamState adam;
};

/// Ordered collection of named parameters, each with its own optimizer state.
class ParamBlock {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Param* find(std::string_view name);
  const Param* find(std::string_view name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;
  std::vector<Tensor> values() const;
  /// Replaces parameter values; optimizer state is untouched.
  void set_values(const std::vector<Tensor>& values);
  void reset_optimizer();

 private:
  std::vector<Param> params_;
};

struct Mlp {
  MlpSpec spec;
  ParamBlock params;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights and biases.
Mlp make_mlp(const MlpSpec& spec, Rng& rng);

/// Intermediate values kept by a forward pass for the matching backward pass.
struct MlpTape {
  std::vector<Tensor> layer_inputs;
  std::vector<Tensor> pre_activations;
  Tensor output;
};

/// Batched forward pass. Input is (batch, input_dim); output is
/// (batch, output_dim), or (batch, 2*output_dim) laid out as [mean | variance]
/// for the gaussian head.
Tensor mlp_forward(const Mlp& mlp, const Tensor& input, MlpTape* tape = nullptr);

struct MlpGradients {
  std::vector<Tensor> params;  // aligned with Mlp::params
  Tensor input;
};

MlpGradients mlp_backward(const Mlp& mlp, const MlpTape& tape, const Tensor& upstream);
MlpGradients mlp_backward(const Mlp& mlp, const Tensor& input, const Tensor& upstream);

/// Splits a gaussian-head output into its mean and variance halves.
std::pair<Tensor, Tensor> split_gaussian(const Tensor& output);
Tensor join_gaussian(const Tensor& mean_part, const Tensor& variance_part);

double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(Head h) noexcept;
Activation parse_activation(std::string_view s);

}  // namespace ls3
