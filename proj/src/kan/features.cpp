#include "kanae/kan/features.hpp"

#include "kanae/nn/activation.hpp"

#include <algorithm>
#include <array>

namespace kanae::kan {

void EdgeFeatures::expand(const SplineGrid& grid, std::span<const double> x) {
  const std::size_t nb = grid.num_basis();
  const std::size_t k = static_cast<std::size_t>(grid.order());
  width_ = nb + 1;
  order_ = k;
  features_.assign(x.size() * width_, 0.0);
  first_.resize(x.size());
  dbasis_.resize(x.size() * k);
  dsilu_.resize(x.size());
  clamped_.resize(x.size());

  std::array<double, SplineGrid::kMaxOrder> values{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    std::span<double> deriv(dbasis_.data() + i * k, k);
    const std::size_t first = grid.local_basis(xi, values, deriv);
    double* row = features_.data() + i * width_;
    std::copy_n(values.begin(), k, row + first);
    row[nb] = nn::silu(xi);
    first_[i] = static_cast<std::uint32_t>(first);
    dsilu_[i] = nn::silu_derivative(xi);
    clamped_[i] = grid.in_range(xi) ? 0 : 1;
  }
}

double EdgeFeatures::input_gradient(std::size_t i, std::span<const double> grad_row) const {
  double g = grad_row[width_ - 1] * dsilu_[i];
  if (!clamped_[i]) {
    const double* d = dbasis_.data() + i * order_;
    const std::size_t first = first_[i];
    for (std::size_t r = 0; r < order_; ++r)
      g += grad_row[first + r] * d[r];
  }
  return g;
}

void fold_edge_weights(std::span<const double> coeffs, std::span<const double> base,
                       std::span<const double> scales, std::size_t num_basis, std::span<double> out) {
  const std::size_t width = num_basis + 1;
  for (std::size_t e = 0; e < scales.size(); ++e) {
    const double s = scales[e];
    const double* c = coeffs.data() + e * num_basis;
    double* w = out.data() + e * width;
    for (std::size_t m = 0; m < num_basis; ++m)
      w[m] = s * c[m];
    w[num_basis] = s * base[e];
  }
}

void unfold_edge_gradients(std::span<const double> grad_eff, std::span<const double> coeffs,
                           std::span<const double> base, std::span<const double> scales,
                           std::size_t num_basis, std::span<double> grad_coeffs,
                           std::span<double> grad_base, std::span<double> grad_scales) {
  const std::size_t width = num_basis + 1;
  for (std::size_t e = 0; e < scales.size(); ++e) {
    const double s = scales[e];
    const double* g = grad_eff.data() + e * width;
    const double* c = coeffs.data() + e * num_basis;
    double* gc = grad_coeffs.data() + e * num_basis;
    double ds = 0.0;
    for (std::size_t m = 0; m < num_basis; ++m) {
      gc[m] += g[m] * s;
      ds += g[m] * c[m];
    }
    grad_base[e] += g[num_basis] * s;
    ds += g[num_basis] * base[e];
    grad_scales[e] += ds;
  }
}

double smoothness_penalty(std::span<const double> coeffs, std::size_t num_basis, double lambda,
                          std::span<double> grad_coeffs) {
  if (lambda == 0.0)
    return 0.0;
  double penalty = 0.0;
  for (std::size_t e = 0; e < coeffs.size() / num_basis; ++e) {
    const double* c = coeffs.data() + e * num_basis;
    double* g = grad_coeffs.data() + e * num_basis;
    for (std::size_t m = 0; m + 1 < num_basis; ++m) {
      const double d = c[m + 1] - c[m];
      penalty += d * d;
      g[m + 1] += 2.0 * lambda * d;
      g[m] -= 2.0 * lambda * d;
    }
  }
  return lambda * penalty;
}

} // namespace kanae::kan
