#pragma once

// Uniform B-spline bases on a fixed knot grid. These back every learnable
// edge function in the KAN layers.

#include <cstddef>
#include <span>
#include <vector>

namespace kanae {

/// Knot layout shared by every edge function of one KAN layer.
///
/// `order` k is the polynomial order (degree k-1); `grid_size` G is the number
/// of intervals covering [range_min, range_max]. The knot vector extends k-1
/// uniformly spaced knots past each end, so it has G + 2k - 1 entries and the
/// basis has G + k - 1 functions. Inputs outside the range are clamped.
class SplineGrid {
public:
  static constexpr int kMaxOrder = 8;

  SplineGrid(int order, int grid_size, double range_min, double range_max);

  int order() const noexcept { return order_; }
  int grid_size() const noexcept { return grid_size_; }
  double range_min() const noexcept { return range_min_; }
  double range_max() const noexcept { return range_max_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t num_basis() const noexcept { return static_cast<std::size_t>(grid_size_ + order_ - 1); }
  std::span<const double> knots() const noexcept { return knots_; }

  double clamp(double x) const noexcept;
  bool in_range(double x) const noexcept { return x >= range_min_ && x <= range_max_; }

  /// Evaluates the `order` basis functions that can be nonzero at clamp(x).
  /// Writes them to values[0..order) and returns the index of the first one.
  /// If `derivs` is non-empty it receives their x-derivatives (one-sided at
  /// the range ends).
  std::size_t local_basis(double x, std::span<double> values, std::span<double> derivs = {}) const;

  /// All num_basis() basis values at clamp(x).
  std::vector<double> basis(double x) const;

  /// All num_basis() basis derivatives at clamp(x).
  std::vector<double> basis_derivative(double x) const;

  /// sum_i coeffs[i] * B_i(clamp(x)); throws DimensionError on a length mismatch.
  double evaluate(std::span<const double> coeffs, double x) const;

  friend bool operator==(const SplineGrid& a, const SplineGrid& b) {
    return a.order_ == b.order_ && a.grid_size_ == b.grid_size_ && a.range_min_ == b.range_min_ &&
           a.range_max_ == b.range_max_;
  }

private:
  int order_;
  int grid_size_;
  double range_min_;
  double range_max_;
  double spacing_;
  std::vector<double> knots_;
};

} // namespace kanae
