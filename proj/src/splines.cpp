#include "kanae/splines.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace kanae {

SplineGrid::SplineGrid(int order, int grid_size, double range_min, double range_max)
    : order_(order), grid_size_(grid_size), range_min_(range_min), range_max_(range_max) {
  if (order < 2 || order > kMaxOrder)
    throw ConfigError("spline order must be in [2, " + std::to_string(kMaxOrder) + "], got " +
                      std::to_string(order));
  if (grid_size < 1)
    throw ConfigError("spline grid size must be >= 1, got " + std::to_string(grid_size));
  if (!std::isfinite(range_min) || !std::isfinite(range_max) || !(range_min < range_max))
    throw ConfigError("spline range must satisfy min < max");
  spacing_ = (range_max - range_min) / grid_size;
  const int count = grid_size + 2 * order - 1;
  knots_.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    knots_[static_cast<std::size_t>(i)] = range_min + (i - (order - 1)) * spacing_;
}

double SplineGrid::clamp(double x) const noexcept { return std::clamp(x, range_min_, range_max_); }

std::size_t SplineGrid::local_basis(double x, std::span<double> values, std::span<double> derivs) const {
  const double xc = clamp(x);
  const int degree = order_ - 1;
  int cell = static_cast<int>(std::floor((xc - range_min_) / spacing_));
  cell = std::clamp(cell, 0, grid_size_ - 1);
  const std::size_t span = static_cast<std::size_t>(cell + degree);
  const double* t = knots_.data();

  std::array<double, kMaxOrder> left{};
  std::array<double, kMaxOrder> right{};
  std::array<double, kMaxOrder> lower{};
  double* n = values.data();
  n[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    if (j == degree)
      std::copy(n, n + degree, lower.begin());
    left[j] = xc - t[span + 1 - j];
    right[j] = t[span + j] - xc;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }

  if (!derivs.empty()) {
    // Uniform knots: dB_i/dx = (B_i,k-1 - B_i+1,k-1) / h.
    const double inv_h = 1.0 / spacing_;
    for (int r = 0; r <= degree; ++r) {
      const double a = r > 0 ? lower[r - 1] : 0.0;
      const double b = r < degree ? lower[r] : 0.0;
      derivs[r] = (a - b) * inv_h;
    }
  }
  return static_cast<std::size_t>(cell);
}

std::vector<double> SplineGrid::basis(double x) const {
  std::vector<double> out(num_basis(), 0.0);
  std::array<double, kMaxOrder> local{};
  const std::size_t first = local_basis(x, local);
  std::copy_n(local.begin(), order_, out.begin() + static_cast<std::ptrdiff_t>(first));
  return out;
}

std::vector<double> SplineGrid::basis_derivative(double x) const {
  std::vector<double> out(num_basis(), 0.0);
  std::array<double, kMaxOrder> local{};
  std::array<double, kMaxOrder> deriv{};
  const std::size_t first = local_basis(x, local, deriv);
  std::copy_n(deriv.begin(), order_, out.begin() + static_cast<std::ptrdiff_t>(first));
  return out;
}

double SplineGrid::evaluate(std::span<const double> coeffs, double x) const {
  if (coeffs.size() != num_basis())
    throw DimensionError("spline has " + std::to_string(num_basis()) + " basis functions, got " +
                         std::to_string(coeffs.size()) + " coefficients");
  std::array<double, kMaxOrder> local{};
  const std::size_t first = local_basis(x, local);
  double s = 0.0;
  for (int r = 0; r < order_; ++r)
    s += coeffs[first + static_cast<std::size_t>(r)] * local[static_cast<std::size_t>(r)];
  return s;
}

} // namespace kanae
