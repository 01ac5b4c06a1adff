#pragma once

#include "kanae/nn/gradcheck.hpp"
#include "kanae/nn/layer.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace kanae::tasks {

struct TimingOptions {
  std::size_t warmup = 10;     // discarded forwards
  std::size_t iterations = 100; // timed forwards
  std::size_t batch = 16;
  std::size_t conv_length = 187;
  std::uint64_t seed = 0;
};

/// Median wall-clock seconds of one eval-mode forward of `layer` on `input`.
double median_forward_seconds(nn::Layer& layer, const Tensor& input, std::size_t warmup, std::size_t iterations);

struct TimingPair {
  std::string name;  // "linear" or "conv1d"
  std::size_t width; // features, or channels for the convolutions
  double plain_seconds = 0.0;
  double kan_seconds = 0.0;
  double ratio = 0.0; // kan / plain
};

/// Matched pairs: KanLinear(w, w) vs Linear(w, w) with G=5, k=4, and
/// KanConv1d vs Conv1d (w channels, kernel 5, length conv_length) for each
/// requested width.
std::vector<TimingPair> timing_benchmark(std::span<const std::size_t> linear_widths,
                                         std::span<const std::size_t> conv_channels, const TimingOptions& options);

std::string timing_csv(std::span<const TimingPair> pairs);

struct SuiteEntry {
  std::string subject;
  nn::GradcheckReport report;
};

/// Gradient checks on seeded batches of two: each layer type once (tolerance
/// 1e-5, batch norm with frozen statistics) and every default-spec model
/// family (tolerance 1e-4). `analytic_scale` != 1 is the negative control.
std::vector<SuiteEntry> gradcheck_suite(double analytic_scale = 1.0, std::uint64_t seed = 0);

} // namespace kanae::tasks
