#pragma once

#include "kanae/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kanae::data {

struct LabeledSeries {
  std::vector<double> values;
  int label = 0;
};

struct LoadedFile {
  std::vector<LabeledSeries> series;
  std::size_t length = 0; // observed series length (all rows agree)
  char delimiter = '\t';
};

/// Reads a UCR-style text file: one series per line, label first, values
/// after. The delimiter (tab, comma or blanks) is detected from the first
/// non-empty line. Every row must have the first row's length; violations
/// and non-numeric or non-finite fields throw ParseError naming the line.
LoadedFile load_ucr(const std::filesystem::path& path);

/// Writes series in the same layout at 17 significant digits, so reloading
/// reproduces the values bitwise.
void write_ucr(const std::filesystem::path& path, std::span<const LabeledSeries> series, char delimiter = '\t');

/// Global z-normalization statistics of a training split.
struct NormalizationStats {
  double mean = 0.0;
  double std = 1.0;
};

/// Mean and (population) standard deviation over every value of `train`.
/// Throws NumericError if std < 1e-8.
NormalizationStats fit_normalization(std::span<const LabeledSeries> train);

std::vector<LabeledSeries> normalize(std::span<const LabeledSeries> series, const NormalizationStats& stats);
std::vector<LabeledSeries> denormalize(std::span<const LabeledSeries> series, const NormalizationStats& stats);

/// Train/test pair normalized with statistics fitted on the train part only.
struct DatasetSplit {
  std::vector<LabeledSeries> train;
  std::vector<LabeledSeries> test;
  NormalizationStats stats;
  std::size_t length = 0;
};

DatasetSplit make_split(std::span<const LabeledSeries> raw_train, std::span<const LabeledSeries> raw_test);

/// [count x length] matrix of the values; throws DimensionError on ragged input.
Tensor to_tensor(std::span<const LabeledSeries> series);
std::vector<int> labels_of(std::span<const LabeledSeries> series);

/// Series whose label equals `label`.
std::vector<LabeledSeries> filter_label(std::span<const LabeledSeries> series, int label);

/// Smallest label present (the default "normal" class).
int smallest_label(std::span<const LabeledSeries> series);

/// Synthetic beats: P, QRS and T waves as Gaussian bumps with seeded jitter.
/// Abnormal beats (label 1) add one large spike at a random position;
/// normal beats have label 0.
std::vector<LabeledSeries> synthetic_heartbeats(std::size_t normal, std::size_t abnormal, std::size_t length,
                                                std::uint64_t seed);

} // namespace kanae::data
