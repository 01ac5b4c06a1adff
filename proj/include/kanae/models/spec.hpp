#pragma once

#include "kanae/splines.hpp"

#include <cstddef>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kanae::models {

enum class Family { ae, kae, cae, kcae };

inline constexpr Family kAllFamilies[] = {Family::ae, Family::kae, Family::cae, Family::kcae};

std::string_view family_name(Family f); // "AE", "KAE", ...
std::optional<Family> parse_family(std::string_view name); // case-insensitive

bool is_convolutional(Family f);
bool is_kan(Family f);

struct GridSpec {
  int order = 4;
  int grid_size = 5;
  double range_min = -2.0;
  double range_max = 2.0;

  SplineGrid make() const { return {order, grid_size, range_min, range_max}; }
  std::size_t num_basis() const { return static_cast<std::size_t>(grid_size + order - 1); }
};

/// Declarative architecture description.
///
/// Dense families (AE, KAE): encoder n -> hidden[0] -> ... -> hidden[m-1] -> k,
/// decoder mirrored. KAE replaces the first encoder block by a KAN layer.
///
/// Convolutional families (CAE, KCAE): `channels` lists the encoder conv
/// outputs (input has one channel), all with the same kernel/stride/padding.
/// The flattened conv output passes through dense `hidden` widths to k; the
/// decoder mirrors the dense part and upsamples with transposed convolutions.
/// KCAE uses KAN convolutions in the encoder.
struct ModelSpec {
  Family family = Family::ae;
  std::size_t input_length = 187;
  std::size_t latent_dim = 32;
  std::vector<std::size_t> hidden;
  std::vector<std::size_t> channels;
  std::size_t kernel = 5;
  std::size_t stride = 2;
  std::size_t padding = 2;
  GridSpec grid;
  bool batchnorm = true;
  bool dropout = true; // encoder blocks only
  double dropout_rate = 0.1;
  bool variational = false;
  double kl_beta = 1e-3;

  static ModelSpec defaults(Family family);

  /// Throws ConfigError describing every violated constraint.
  void validate() const;

  /// Encoder conv lengths, input first: [n, L_1, ..., L_m]. Empty for dense families.
  std::vector<std::size_t> conv_lengths() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Closed-form trainable parameter count; must equal Model::param_count().
std::size_t expected_param_count(const ModelSpec& spec);

} // namespace kanae::models
