#include "ls3/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eigen_view.hpp"

namespace ls3 {

using detail::view;

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw std::invalid_argument("mlp dims must be >= 1");
  for (auto h : hidden_dims) {
    if (h == 0) throw std::invalid_argument("mlp hidden dims must be >= 1");
  }
}

void ParamBlock::add(std::string name, Tensor value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  AdamState adam{Tensor(value.shape()), Tensor(value.shape()), 0};
  params_.push_back(Param{std::move(name), std::move(value), std::move(adam)});
}

Param* ParamBlock::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Param* ParamBlock::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamBlock::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> ParamBlock::values() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParamBlock::set_values(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw std::invalid_argument("set_values: count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require_same_shape(params_[i].value, values[i], "set_values " + params_[i].name);
    params_[i].value = values[i];
  }
}

void ParamBlock::reset_optimizer() {
  for (auto& p : params_) p.adam = AdamState{Tensor(p.value.shape()), Tensor(p.value.shape()), 0};
}

double softplus(double x) noexcept { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string_view to_string(Activation a) noexcept { return a == Activation::relu ? "relu" : "tanh"; }

std::string_view to_string(Head h) noexcept {
  switch (h) {
    case Head::linear: return "linear";
    case Head::sigmoid: return "sigmoid";
    case Head::gaussian: return "gaussian";
  }
  return "?";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  Mlp mlp{spec, {}};
  std::vector<std::size_t> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  dims.push_back(spec.raw_output_dim());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    Tensor w({dims[l + 1], dims[l]});
    Tensor b({dims[l + 1]});
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    for (auto& v : b.data()) v = rng.uniform(-bound, bound);
    mlp.params.add("layer" + std::to_string(l) + ".weight", std::move(w));
    mlp.params.add("layer" + std::to_string(l) + ".bias", std::move(b));
  }
  return mlp;
}

namespace {

std::size_t layer_count(const Mlp& mlp) { return mlp.spec.hidden_dims.size() + 1; }

void check_layer(const Mlp& mlp, std::size_t l, std::size_t in, std::size_t out) {
  const auto& w = mlp.params[2 * l].value;
  const auto& b = mlp.params[2 * l + 1].value;
  if (w.shape() != std::vector<std::size_t>{out, in} || b.shape() != std::vector<std::size_t>{out}) {
    throw std::invalid_argument("layer" + std::to_string(l) + ": parameter shape " +
                                shape_string(w.shape()) + " does not match (" + std::to_string(out) +
                                ", " + std::to_string(in) + ")");
  }
}

bool variance_in_range(double sp) noexcept { return sp >= kVarianceFloor && sp <= kVarianceCeiling; }

}  // namespace

Tensor mlp_forward(const Mlp& mlp, const Tensor& input, MlpTape* tape) {
  const auto& spec = mlp.spec;
  if (mlp.params.size() != 2 * layer_count(mlp)) {
    throw std::invalid_argument("mlp parameter count does not match spec");
  }
  if (input.rank() != 2 || input.cols() != spec.input_dim) {
    throw std::invalid_argument("layer0: input shape " + shape_string(input.shape()) +
                                " does not match input_dim " + std::to_string(spec.input_dim));
  }
  const std::size_t batch = input.rows();
  if (tape) {
    tape->layer_inputs.clear();
    tape->pre_activations.clear();
  }

  Tensor current = input;
  const std::size_t layers = layer_count(mlp);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = current.cols();
    const std::size_t out = l + 1 < layers ? spec.hidden_dims[l] : spec.raw_output_dim();
    check_layer(mlp, l, in, out);
    const auto& w = mlp.params[2 * l].value;
    const auto& b = mlp.params[2 * l + 1].value;

    Tensor pre({batch, out});
    auto y = view(pre);
    y.noalias() = view(current) * view(w).transpose();
    y.rowwise() += view(b, 1, out).row(0);

    if (tape) tape->layer_inputs.push_back(current);
    if (l + 1 < layers) {
      Tensor act = pre;
      if (spec.hidden_activation == Activation::relu) {
        for (auto& v : act.data()) v = v > 0.0 ? v : 0.0;
      } else {
        for (auto& v : act.data()) v = std::tanh(v);
      }
      if (tape) tape->pre_activations.push_back(std::move(pre));
      current = std::move(act);
    } else {
      Tensor outp = pre;
      if (spec.output_head == Head::sigmoid) {
        for (auto& v : outp.data()) v = sigmoid(v);
      } else if (spec.output_head == Head::gaussian) {
        const std::size_t d = spec.output_dim;
        for (std::size_t r = 0; r < batch; ++r) {
          auto row = outp.row(r);
          for (std::size_t j = d; j < 2 * d; ++j) {
            row[j] = std::clamp(softplus(row[j]), kVarianceFloor, kVarianceCeiling);
          }
        }
      }
      if (tape) tape->pre_activations.push_back(std::move(pre));
      current = std::move(outp);
    }
  }
  if (tape) tape->output = current;
  return current;
}

MlpGradients mlp_backward(const Mlp& mlp, const MlpTape& tape, const Tensor& upstream) {
  const auto& spec = mlp.spec;
  const std::size_t layers = layer_count(mlp);
  if (tape.layer_inputs.size() != layers || tape.pre_activations.size() != layers) {
    throw std::invalid_argument("mlp_backward: tape does not belong to this network");
  }
  require_same_shape(tape.output, upstream, "mlp_backward upstream gradient");
  const std::size_t batch = upstream.rows();

  // Gradient w.r.t. the final pre-activation.
  Tensor delta = upstream;
  const Tensor& raw = tape.pre_activations.back();
  if (spec.output_head == Head::sigmoid) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double s = tape.output[i];
      delta[i] *= s * (1.0 - s);
    }
  } else if (spec.output_head == Head::gaussian) {
    const std::size_t d = spec.output_dim;
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = d; j < 2 * d; ++j) {
        const double x = raw(r, j);
        delta(r, j) *= variance_in_range(softplus(x)) ? sigmoid(x) : 0.0;
      }
    }
  }

  MlpGradients grads;
  grads.params.resize(mlp.params.size());
  for (std::size_t li = layers; li-- > 0;) {
    const Tensor& x = tape.layer_inputs[li];
    const auto& w = mlp.params[2 * li].value;
    const std::size_t in = x.cols();
    const std::size_t out = w.dim(0);

    Tensor dw({out, in});
    view(dw).noalias() = view(delta).transpose() * view(x);
    Tensor db({out});
    view(db, 1, out).row(0) = view(delta).colwise().sum();
    grads.params[2 * li] = std::move(dw);
    grads.params[2 * li + 1] = std::move(db);

    Tensor dx({batch, in});
    view(dx).noalias() = view(delta) * view(w);
    if (li > 0) {
      const Tensor& pre = tape.pre_activations[li - 1];
      if (spec.hidden_activation == Activation::relu) {
        for (std::size_t i = 0; i < dx.size(); ++i) {
          if (pre[i] <= 0.0) dx[i] = 0.0;
        }
      } else {
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double t = x[i];  // x is tanh(pre) for this layer's input
          dx[i] *= 1.0 - t * t;
        }
      }
      delta = std::move(dx);
    } else {
      grads.input = std::move(dx);
    }
  }
  return grads;
}

MlpGradients mlp_backward(const Mlp& mlp, const Tensor& input, const Tensor& upstream) {
  MlpTape tape;
  mlp_forward(mlp, input, &tape);
  return mlp_backward(mlp, tape, upstream);
}

std::pair<Tensor, Tensor> split_gaussian(const Tensor& output) {
  const std::size_t n = output.rows();
  const std::size_t d = output.cols() / 2;
  Tensor mean({n, d}), var({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    auto row = output.row(r);
    std::copy_n(row.begin(), d, mean.row(r).begin());
    std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(d), d, var.row(r).begin());
  }
  return {std::move(mean), std::move(var)};
}

Tensor join_gaussian(const Tensor& mean_part, const Tensor& variance_part) {
  require_same_shape(mean_part, variance_part, "join_gaussian");
  return concat_cols(mean_part, variance_part);
}

}  // namespace ls3
