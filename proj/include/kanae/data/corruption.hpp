#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace kanae::data {

enum class CorruptionKind { none, gaussian_noise, mask };

std::string_view corruption_name(CorruptionKind kind);
std::optional<CorruptionKind> parse_corruption(std::string_view name);

struct Corruption {
  CorruptionKind kind = CorruptionKind::none;
  double noise_sigma = 0.3;
  double mask_ratio = 0.2;
  std::size_t mask_block = 10;
  std::uint64_t seed = 0;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

/// ceil(ratio * length / block), capped at floor(length / block).
std::size_t mask_block_count(double ratio, std::size_t length, std::size_t block);

struct Corrupted {
  std::vector<double> values;
  std::vector<std::uint8_t> keep; // 1 = observed, 0 = masked
};

/// Epoch tag used for corrupting evaluation data, distinct from any training epoch.
inline constexpr std::uint64_t kEvaluationEpoch = ~std::uint64_t{0};

/// Corrupted copy of `series`. The draw depends only on (seed, epoch,
/// sample), so it is reproducible and independent of batch order.
/// Noise adds N(0, sigma^2) per element; masking zeroes non-overlapping
/// blocks at seeded positions.
Corrupted corrupt(std::span<const double> series, const Corruption& c, std::uint64_t sample,
                  std::uint64_t epoch);

} // namespace kanae::data
