#include "kanae/data/corruption.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace kanae::data {

namespace {

std::mt19937_64 corruption_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),   static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch),  static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32)};
  return std::mt19937_64(seq);
}

} // namespace

std::string_view corruption_name(CorruptionKind kind) {
  switch (kind) {
  case CorruptionKind::none:
    return "none";
  case CorruptionKind::gaussian_noise:
    return "gaussian_noise";
  case CorruptionKind::mask:
    return "mask";
  }
  return "?";
}

std::optional<CorruptionKind> parse_corruption(std::string_view name) {
  for (auto k : {CorruptionKind::none, CorruptionKind::gaussian_noise, CorruptionKind::mask})
    if (corruption_name(k) == name)
      return k;
  if (name == "noise")
    return CorruptionKind::gaussian_noise;
  return std::nullopt;
}

void Corruption::validate() const {
  std::vector<std::string> problems;
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    problems.push_back("noise sigma must be finite and >= 0");
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0))
    problems.push_back("mask ratio must lie in [0, 1)");
  if (mask_block < 1)
    problems.push_back("mask block length must be >= 1");
  if (!problems.empty()) {
    std::string msg = "invalid corruption:";
    for (const auto& p : problems)
      msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::size_t mask_block_count(double ratio, std::size_t length, std::size_t block) {
  if (block == 0 || ratio <= 0.0)
    return 0;
  const auto wanted =
      static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(length) / static_cast<double>(block)));
  return std::min(wanted, length / block);
}

Corrupted corrupt(std::span<const double> series, const Corruption& c, std::uint64_t sample,
                  std::uint64_t epoch) {
  Corrupted out{std::vector<double>(series.begin(), series.end()),
                std::vector<std::uint8_t>(series.size(), 1)};
  if (c.kind == CorruptionKind::none)
    return out;
  auto rng = corruption_rng(c.seed, epoch, sample);

  if (c.kind == CorruptionKind::gaussian_noise) {
    if (c.noise_sigma == 0.0)
      return out;
    std::normal_distribution<double> noise(0.0, c.noise_sigma);
    for (double& v : out.values)
      v += noise(rng);
    return out;
  }

  // Blocks go into the free slack: draw `count` offsets in [0, slack], sort
  // them, and put block i at offset_i + i*block so blocks never overlap.
  const std::size_t L = series.size();
  const std::size_t count = mask_block_count(c.mask_ratio, L, c.mask_block);
  if (count == 0)
    return out;
  const std::size_t slack = L - count * c.mask_block;
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  std::vector<std::size_t> offsets(count);
  for (auto& o : offsets)
    o = pick(rng);
  std::sort(offsets.begin(), offsets.end());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = offsets[i] + i * c.mask_block;
    for (std::size_t j = start; j < start + c.mask_block; ++j) {
      out.values[j] = 0.0;
      out.keep[j] = 0;
    }
  }
  return out;
}

} // namespace kanae::data
