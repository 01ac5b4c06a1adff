#pragma once

#include "kanae/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kanae::tasks {

double mean(std::span<const double> values);

/// Linearly interpolated quantile, q in [0, 1] (position q*(n-1) in sorted order).
double quantile(std::span<const double> values, double q);

struct DriftSummary {
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  double max = 0.0;
};

DriftSummary summarize_drift(std::span<const double> losses);

/// Area under the ROC curve of `scores` for `positive` (nonzero = positive
/// class), from the rank-sum statistic with midranks for ties. Throws
/// ConfigError when either class is absent.
double auc(std::span<const double> scores, std::span<const int> positive);

struct Confusion {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

/// Predicted positive when score > threshold.
Confusion confusion_at(std::span<const double> scores, std::span<const int> positive, double threshold);

/// Projection of the centered rows of `points` onto their first two
/// principal axes, found by power iteration with deflation. [n x 2].
Tensor pca_project_2d(const Tensor& points, std::uint64_t seed = 0);

/// Mean silhouette coefficient under Euclidean distance. NaN when fewer
/// than two labels are present.
double silhouette(const Tensor& points, std::span<const int> labels);

} // namespace kanae::tasks
