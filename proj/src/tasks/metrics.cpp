#include "kanae/tasks/metrics.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace kanae::tasks {

double mean(std::span<const double> values) {
  if (values.empty())
    return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values)
    s += v;
  return s / static_cast<double>(values.size());
}

double quantile(std::span<const double> values, double q) {
  if (values.empty())
    throw ConfigError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw ConfigError("quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DriftSummary summarize_drift(std::span<const double> losses) {
  DriftSummary d;
  d.q50 = quantile(losses, 0.50);
  d.q90 = quantile(losses, 0.90);
  d.q99 = quantile(losses, 0.99);
  d.max = *std::max_element(losses.begin(), losses.end());
  return d;
}

double auc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size())
    throw DimensionError("auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(positive.size()) + " labels");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]])
      ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (positive[order[t]] != 0) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw ConfigError("AUC is undefined: the evaluation split holds a single class");
  const double p = static_cast<double>(n_pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

Confusion confusion_at(std::span<const double> scores, std::span<const int> positive, double threshold) {
  if (scores.size() != positive.size())
    throw DimensionError("confusion: scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = positive[i] != 0;
    if (predicted && actual)
      ++c.true_positive;
    else if (predicted)
      ++c.false_positive;
    else if (actual)
      ++c.false_negative;
    else
      ++c.true_negative;
  }
  return c;
}

Tensor pca_project_2d(const Tensor& points, std::uint64_t seed) {
  require_rank(points, 2, "pca");
  const std::size_t n = points.dim(0), d = points.dim(1);
  Tensor out({n, 2});
  if (n == 0 || d == 0)
    return out;
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      mu[j] += points.at(i, j) / static_cast<double>(n);
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = points.at(i, a) - mu[a];
      for (std::size_t b = 0; b < d; ++b)
        cov[a * d + b] += xa * (points.at(i, b) - mu[b]);
    }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t components = std::min<std::size_t>(2, d);
  for (std::size_t c = 0; c < components; ++c) {
    std::vector<double> v(d), next(d);
    for (double& x : v)
      x = g(rng);
    double eigen = 0.0;
    for (int it = 0; it < 500; ++it) {
      for (std::size_t a = 0; a < d; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < d; ++b)
          s += cov[a * d + b] * v[b];
        next[a] = s;
      }
      double norm = 0.0;
      for (double x : next)
        norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0)
        break; // remaining variance is zero: the axis stays at its random start
      double change = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        next[a] /= norm;
        change = std::max(change, std::abs(std::abs(next[a]) - std::abs(v[a])));
      }
      v.swap(next);
      eigen = norm;
      if (change < 1e-12)
        break;
    }
    // Fix the sign so the largest-magnitude coordinate is positive.
    const auto big = std::max_element(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*big < 0)
      for (double& x : v)
        x = -x;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        s += (points.at(i, j) - mu[j]) * v[j];
      out.at(i, c) = s;
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov[a * d + b] -= eigen * v[a] * v[b];
  }
  return out;
}

double silhouette(const Tensor& points, std::span<const int> labels) {
  require_rank(points, 2, "silhouette");
  const std::size_t n = points.dim(0), d = points.dim(1);
  if (labels.size() != n)
    throw DimensionError("silhouette: labels and points differ in count");
  std::map<int, std::size_t> sizes;
  for (int l : labels)
    ++sizes[l];
  if (sizes.size() < 2)
    return std::numeric_limits<double>::quiet_NaN();

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, double> dist_sum;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j)
        continue;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = points.at(i, k) - points.at(j, k);
        s += diff * diff;
      }
      dist_sum[labels[j]] += std::sqrt(s);
    }
    const std::size_t own = sizes[labels[i]];
    if (own < 2)
      continue; // singleton clusters score 0 by convention
    const double a = dist_sum[labels[i]] / static_cast<double>(own - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, count] : sizes)
      if (label != labels[i])
        b = std::min(b, dist_sum[label] / static_cast<double>(count));
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

} // namespace kanae::tasks
