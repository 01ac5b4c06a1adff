#include "kanae/data/dataset.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <string_view>

namespace kanae::data {

namespace {

char detect_delimiter(std::string_view line) {
  if (line.find('\t') != std::string_view::npos)
    return '\t';
  if (line.find(',') != std::string_view::npos)
    return ',';
  return ' ';
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Blank-delimited lines may use runs of spaces or tabs; other delimiters are exact.
std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
        ++i;
      if (i == line.size())
        break;
      const std::size_t j = line.find_first_of(" \t", i);
      const std::size_t stop = j == std::string_view::npos ? line.size() : j;
      out.push_back(line.substr(i, stop - i));
      i = stop;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t j = line.find(delim, start);
    out.push_back(trim(line.substr(start, j == std::string_view::npos ? std::string_view::npos : j - start)));
    if (j == std::string_view::npos)
      break;
    start = j + 1;
  }
  return out;
}

double parse_field(std::string_view field, const std::string& where) {
  if (!field.empty() && field.front() == '+')
    field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(where + ": not a number: '" + std::string(field) + "'");
  if (!std::isfinite(v))
    throw ParseError(where + ": non-finite value '" + std::string(field) + "'");
  return v;
}

} // namespace

LoadedFile load_ucr(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open dataset file " + path.string());
  LoadedFile out;
  bool have_delim = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = trim(line);
    if (body.empty())
      continue;
    if (!have_delim) {
      out.delimiter = detect_delimiter(body);
      have_delim = true;
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto fields = split_fields(body, out.delimiter);
    if (fields.size() < 2)
      throw ParseError(where + ": expected a label and at least one value");
    LabeledSeries s;
    const double label = parse_field(fields[0], where);
    if (label != std::round(label))
      throw ParseError(where + ": label " + std::string(fields[0]) + " is not an integer");
    s.label = static_cast<int>(label);
    s.values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      s.values.push_back(parse_field(fields[i], where));
    if (out.series.empty())
      out.length = s.values.size();
    else if (s.values.size() != out.length)
      throw ParseError(where + ": series length " + std::to_string(s.values.size()) + " differs from " +
                       std::to_string(out.length) + " on the first row");
    out.series.push_back(std::move(s));
  }
  if (in.bad())
    throw IoError("read failed for " + path.string());
  if (out.series.empty())
    throw ParseError(path.string() + ": no series found");
  return out;
}

void write_ucr(const std::filesystem::path& path, std::span<const LabeledSeries> series, char delimiter) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  char buf[32];
  for (const auto& s : series) {
    out << s.label;
    for (double v : s.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << delimiter << buf;
    }
    out << '\n';
  }
  if (!out)
    throw IoError("write failed for " + path.string());
}

NormalizationStats fit_normalization(std::span<const LabeledSeries> train) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : train) {
    for (double v : s.values)
      sum += v;
    count += s.values.size();
  }
  if (count == 0)
    throw ConfigError("cannot normalize an empty training split");
  NormalizationStats st;
  st.mean = sum / static_cast<double>(count);
  double sq = 0.0;
  for (const auto& s : train)
    for (double v : s.values)
      sq += (v - st.mean) * (v - st.mean);
  st.std = std::sqrt(sq / static_cast<double>(count));
  if (!(st.std >= 1e-8))
    throw NumericError("training split is degenerate: standard deviation " + std::to_string(st.std) +
                       " is below 1e-8");
  return st;
}

std::vector<LabeledSeries> normalize(std::span<const LabeledSeries> series, const NormalizationStats& stats) {
  std::vector<LabeledSeries> out(series.begin(), series.end());
  for (auto& s : out)
    for (double& v : s.values)
      v = (v - stats.mean) / stats.std;
  return out;
}

std::vector<LabeledSeries> denormalize(std::span<const LabeledSeries> series, const NormalizationStats& stats) {
  std::vector<LabeledSeries> out(series.begin(), series.end());
  for (auto& s : out)
    for (double& v : s.values)
      v = v * stats.std + stats.mean;
  return out;
}

DatasetSplit make_split(std::span<const LabeledSeries> raw_train, std::span<const LabeledSeries> raw_test) {
  if (raw_train.empty())
    throw ConfigError("training split is empty");
  DatasetSplit split;
  split.length = raw_train.front().values.size();
  for (auto part : {raw_train, raw_test})
    for (const auto& s : part)
      if (s.values.size() != split.length)
        throw DimensionError("series length " + std::to_string(s.values.size()) + " differs from " +
                             std::to_string(split.length));
  split.stats = fit_normalization(raw_train);
  split.train = normalize(raw_train, split.stats);
  split.test = normalize(raw_test, split.stats);
  return split;
}

Tensor to_tensor(std::span<const LabeledSeries> series) {
  if (series.empty())
    return Tensor({0, 0});
  const std::size_t width = series.front().values.size();
  Tensor out({series.size(), width});
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].values.size() != width)
      throw DimensionError("row " + std::to_string(i) + " has length " + std::to_string(series[i].values.size()) +
                           ", expected " + std::to_string(width));
    std::copy(series[i].values.begin(), series[i].values.end(), out.data() + i * width);
  }
  return out;
}

std::vector<int> labels_of(std::span<const LabeledSeries> series) {
  std::vector<int> out;
  out.reserve(series.size());
  for (const auto& s : series)
    out.push_back(s.label);
  return out;
}

std::vector<LabeledSeries> filter_label(std::span<const LabeledSeries> series, int label) {
  std::vector<LabeledSeries> out;
  for (const auto& s : series)
    if (s.label == label)
      out.push_back(s);
  return out;
}

int smallest_label(std::span<const LabeledSeries> series) {
  if (series.empty())
    throw ConfigError("no labels in an empty split");
  int best = series.front().label;
  for (const auto& s : series)
    best = std::min(best, s.label);
  return best;
}

std::vector<LabeledSeries> synthetic_heartbeats(std::size_t normal, std::size_t abnormal, std::size_t length,
                                                std::uint64_t seed) {
  if (length < 8)
    throw ConfigError("synthetic beats need length >= 8");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double L = static_cast<double>(length);

  auto bump = [](double t, double centre, double width, double amp) {
    const double d = (t - centre) / width;
    return amp * std::exp(-0.5 * d * d);
  };

  std::vector<LabeledSeries> out;
  out.reserve(normal + abnormal);
  for (std::size_t i = 0; i < normal + abnormal; ++i) {
    const double shift = 0.02 * jitter(rng);
    const double gain = 1.0 + 0.08 * jitter(rng);
    LabeledSeries s;
    s.label = i < normal ? 0 : 1;
    s.values.resize(length);
    for (std::size_t j = 0; j < length; ++j) {
      const double t = static_cast<double>(j) / L - shift;
      double v = bump(t, 0.18, 0.035, 0.15);  // P
      v += bump(t, 0.30, 0.008, -0.12);       // Q
      v += bump(t, 0.32, 0.012, 1.00);        // R
      v += bump(t, 0.345, 0.010, -0.25);      // S
      v += bump(t, 0.58, 0.055, 0.30);        // T
      s.values[j] = gain * v + 0.01 * jitter(rng);
    }
    if (s.label == 1) {
      const auto at = static_cast<std::size_t>(unit(rng) * static_cast<double>(length - 4)) + 2;
      const double amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (1.5 + unit(rng));
      for (std::size_t j = at - 2; j <= at + 2; ++j)
        s.values[j] += amp * std::exp(-0.5 * std::pow(static_cast<double>(j) - static_cast<double>(at), 2.0));
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace kanae::data
