#include "kanae/nn/activation.hpp"

#include "kanae/error.hpp"

#include <cmath>

namespace kanae::nn {

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
  case ActivationKind::identity: return "identity";
  case ActivationKind::silu: return "silu";
  case ActivationKind::tanh: return "tanh";
  }
  return "unknown";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  if (name == "identity")
    return ActivationKind::identity;
  if (name == "silu")
    return ActivationKind::silu;
  if (name == "tanh")
    return ActivationKind::tanh;
  return std::nullopt;
}

double sigmoid(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

double silu_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double activate(ActivationKind kind, double x) {
  switch (kind) {
  case ActivationKind::identity: return x;
  case ActivationKind::silu: return silu(x);
  case ActivationKind::tanh: return std::tanh(x);
  }
  return x;
}

double activate_derivative(ActivationKind kind, double x) {
  switch (kind) {
  case ActivationKind::identity: return 1.0;
  case ActivationKind::silu: return silu_derivative(x);
  case ActivationKind::tanh: {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  }
  }
  return 1.0;
}

Tensor Activation::forward(const Tensor& input, RunContext& /*ctx*/) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i)
    out[i] = activate(kind_, input[i]);
  input_ = input;
  cached_ = true;
  return out;
}

Tensor Activation::backward(const Tensor& grad_output) {
  require_forward(cached_, kind());
  if (!grad_output.same_shape(input_))
    throw DimensionError(kind() + " backward: gradient shape " + shape_string(grad_output.shape()));
  Tensor grad_input(grad_output.shape());
  for (std::size_t i = 0; i < grad_output.size(); ++i)
    grad_input[i] = grad_output[i] * activate_derivative(kind_, input_[i]);
  return grad_input;
}

Tensor Reshape::forward(const Tensor& input, RunContext& /*ctx*/) {
  Shape target{input.dim(0)};
  target.insert(target.end(), sample_shape_.begin(), sample_shape_.end());
  input_shape_ = input.shape();
  cached_ = true;
  return input.reshaped(std::move(target));
}

Tensor Reshape::backward(const Tensor& grad_output) {
  require_forward(cached_, "reshape");
  return grad_output.reshaped(input_shape_);
}

} // namespace kanae::nn
