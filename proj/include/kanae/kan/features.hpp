#pragma once

#include "kanae/splines.hpp"
#include "kanae/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kanae::kan {

/// Per-scalar expansion used by both KAN layers.
///
/// Every edge function has the form psi(x) = scale * (w_base * silu(x) +
/// sum_m c_m B_m(x)). Writing each input x as the feature row
/// [B_0(x), ..., B_{n-1}(x), silu(x)] turns a whole KAN layer into a dense
/// product with effective weights scale * [c_0, ..., c_{n-1}, w_base].
class EdgeFeatures {
public:
  /// Expands `x` on `grid`. features() is [x.size() x (num_basis + 1)].
  void expand(const SplineGrid& grid, std::span<const double> x);

  std::size_t width() const noexcept { return width_; }
  std::size_t count() const noexcept { return first_.size(); }
  const std::vector<double>& features() const noexcept { return features_; }

  /// d/dx of sum_m grad_row[m] * feature_m(x) for element i. The spline part
  /// contributes nothing where x was clamped.
  double input_gradient(std::size_t i, std::span<const double> grad_row) const;

private:
  std::size_t width_ = 0;
  std::size_t order_ = 0;
  std::vector<double> features_;
  std::vector<std::uint32_t> first_;
  std::vector<double> dbasis_; // [count x order]
  std::vector<double> dsilu_;
  std::vector<std::uint8_t> clamped_;
};

/// Effective weights scale*[coeffs..., base] laid out per edge.
void fold_edge_weights(std::span<const double> coeffs, std::span<const double> base,
                       std::span<const double> scales, std::size_t num_basis, std::span<double> out);

/// Splits a gradient on the effective weights back onto coeffs/base/scales
/// (accumulating).
void unfold_edge_gradients(std::span<const double> grad_eff, std::span<const double> coeffs,
                           std::span<const double> base, std::span<const double> scales,
                           std::size_t num_basis, std::span<double> grad_coeffs,
                           std::span<double> grad_base, std::span<double> grad_scales);

/// lambda * sum over edges of sum_m (c_{m+1} - c_m)^2; adds its gradient
/// into `grad_coeffs` and returns the penalty.
double smoothness_penalty(std::span<const double> coeffs, std::size_t num_basis, double lambda,
                          std::span<double> grad_coeffs);

} // namespace kanae::kan
