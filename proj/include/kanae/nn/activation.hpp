#pragma once

#include "kanae/nn/layer.hpp"

#include <optional>
#include <string_view>

namespace kanae::nn {

enum class ActivationKind { identity, silu, tanh };

std::string_view activation_name(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);

double sigmoid(double x);
double silu(double x);
double silu_derivative(double x);

double activate(ActivationKind kind, double x);
/// Derivative given the pre-activation x.
double activate_derivative(ActivationKind kind, double x);

/// Pointwise activation over any tensor shape.
class Activation : public Layer {
public:
  explicit Activation(ActivationKind kind) : kind_(kind) {}

  std::string kind() const override { return std::string(activation_name(kind_)); }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;

  ActivationKind activation() const noexcept { return kind_; }

private:
  ActivationKind kind_;
  Tensor input_;
  bool cached_ = false;
};

/// Reinterprets the per-sample trailing shape, keeping the batch axis.
class Reshape : public Layer {
public:
  explicit Reshape(Shape sample_shape) : sample_shape_(std::move(sample_shape)) {}

  std::string kind() const override { return "reshape"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;

private:
  Shape sample_shape_;
  Shape input_shape_;
  bool cached_ = false;
};

} // namespace kanae::nn
