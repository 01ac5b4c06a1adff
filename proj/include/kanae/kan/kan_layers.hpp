#pragma once

// Kolmogorov-Arnold layers: every connection j -> i carries its own learnable
// univariate function psi_ij, node i sums its incoming edges and applies phi_i.
//
//   z_i = sum_j psi_ij(x_j),   y_i = phi_i(z_i)
//   psi_ij(x) = scale_ij * (base_ij * silu(x) + spline_ij(clamp(x)))
//
// All edges of a layer share one SplineGrid.

#include "kanae/kan/features.hpp"
#include "kanae/nn/activation.hpp"
#include "kanae/nn/conv.hpp"
#include "kanae/nn/layer.hpp"

namespace kanae::kan {

/// Learnable edge-function parameters for `edges` edges on one grid.
/// spline_coeffs is [edges... x B]; base_weights and scales are [edges...].
struct KanEdgeBank {
  SplineGrid grid;
  nn::Parameter spline_coeffs;
  nn::Parameter base_weights;
  nn::Parameter scales;

  KanEdgeBank(SplineGrid g, const Shape& edge_shape);

  /// coeffs ~ N(0, 0.1/sqrt(B)), base ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), scales = 1.
  void initialize(std::size_t fan_in, nn::Rng& rng);

  std::size_t edges() const noexcept { return scales.value.size(); }
  std::size_t num_basis() const noexcept { return grid.num_basis(); }

  void fold(std::vector<double>& effective) const;
  void unfold(const std::vector<double>& grad_effective);
  void collect(std::vector<nn::ParamRef>& out, const std::string& prefix);

  /// Optional coefficient-difference penalty; adds its gradient, returns its value.
  double smoothness(double lambda);
};

/// Dense KAN layer on [batch x in] inputs.
class KanLinear : public nn::Layer {
public:
  /// Zero spline coefficients and base weights, unit scales.
  KanLinear(std::size_t in, std::size_t out, SplineGrid grid,
            nn::ActivationKind node = nn::ActivationKind::identity);
  KanLinear(std::size_t in, std::size_t out, SplineGrid grid, nn::ActivationKind node, nn::Rng& rng);

  std::string kind() const override { return "kan_linear"; }
  Tensor forward(const Tensor& input, nn::RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  /// Names are kan.<prefix>.spline_coeffs / .base_weights / .scales.
  void collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) override;

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  nn::ActivationKind node_function() const noexcept { return node_; }
  KanEdgeBank& bank() noexcept { return bank_; }
  const SplineGrid& grid() const noexcept { return bank_.grid; }

  /// out * in * (B + 2)
  std::size_t kan_param_count() const noexcept;

private:
  std::size_t in_;
  std::size_t out_;
  nn::ActivationKind node_;
  KanEdgeBank bank_;

  EdgeFeatures features_;
  std::vector<double> effective_;
  Tensor pre_activation_;
  std::size_t batch_ = 0;
  bool cached_ = false;
};

/// 1-D KAN convolution on [batch x C_in x L]: every (C_out, C_in, tap) triple
/// carries an edge function applied to the input under that tap. Window
/// positions that fall into the padding contribute nothing.
class KanConv1d : public nn::Layer {
public:
  KanConv1d(const nn::ConvGeometry& geometry, SplineGrid grid);
  KanConv1d(const nn::ConvGeometry& geometry, SplineGrid grid, nn::Rng& rng);

  std::string kind() const override { return "kan_conv1d"; }
  Tensor forward(const Tensor& input, nn::RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) override;

  const nn::ConvGeometry& geometry() const noexcept { return geom_; }
  KanEdgeBank& bank() noexcept { return bank_; }
  const SplineGrid& grid() const noexcept { return bank_.grid; }

  /// C_out * C_in * kernel * (B + 2)
  std::size_t kan_param_count() const noexcept;

private:
  nn::ConvGeometry geom_;
  KanEdgeBank bank_;

  EdgeFeatures features_;
  std::vector<double> effective_;
  Tensor cols_;
  std::size_t batch_ = 0;
  std::size_t in_length_ = 0;
  std::size_t out_length_ = 0;
  bool cached_ = false;
};

} // namespace kanae::kan
