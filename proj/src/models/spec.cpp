#include "kanae/models/spec.hpp"

#include "kanae/error.hpp"
#include "kanae/nn/conv.hpp"

#include <algorithm>
#include <cctype>

namespace kanae::models {

std::string_view family_name(Family f) {
  switch (f) {
  case Family::ae:
    return "AE";
  case Family::kae:
    return "KAE";
  case Family::cae:
    return "CAE";
  case Family::kcae:
    return "KCAE";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Family f : kAllFamilies)
    if (family_name(f) == upper)
      return f;
  return std::nullopt;
}

bool is_convolutional(Family f) { return f == Family::cae || f == Family::kcae; }
bool is_kan(Family f) { return f == Family::kae || f == Family::kcae; }

ModelSpec ModelSpec::defaults(Family family) {
  ModelSpec s;
  s.family = family;
  switch (family) {
  case Family::ae:
    s.hidden = {2048, 1536, 512};
    break;
  case Family::kae:
    s.hidden = {1024, 768, 256};
    break;
  case Family::cae:
    s.channels = {16, 32, 64};
    s.hidden = {512};
    break;
  case Family::kcae:
    s.channels = {8, 16, 32};
    s.hidden = {512};
    break;
  }
  return s;
}

std::vector<std::size_t> ModelSpec::conv_lengths() const {
  std::vector<std::size_t> lengths;
  if (!is_convolutional(family))
    return lengths;
  lengths.push_back(input_length);
  for (std::size_t i = 0; i < channels.size(); ++i)
    lengths.push_back(nn::conv_output_length(lengths.back(), kernel, stride, padding));
  return lengths;
}

void ModelSpec::validate() const {
  std::vector<std::string> problems;
  if (input_length < 2)
    problems.push_back("model.input_length must be >= 2");
  if (latent_dim < 1 || latent_dim >= input_length)
    problems.push_back("model.latent_dim must satisfy 1 <= k < input_length (k=" + std::to_string(latent_dim) +
                       ", n=" + std::to_string(input_length) + ")");
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (hidden[i] == 0)
      problems.push_back("model.hidden[" + std::to_string(i) + "] is zero");
  if (family == Family::kae && hidden.empty())
    problems.push_back("model.hidden: KAE needs at least one hidden width for its KAN block");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    problems.push_back("model.dropout_rate must lie in [0, 1)");
  if (!(kl_beta >= 0.0))
    problems.push_back("model.kl_beta must be >= 0");
  if (is_kan(family)) {
    if (grid.order < 2 || grid.order > SplineGrid::kMaxOrder)
      problems.push_back("kan.order must lie in [2, " + std::to_string(SplineGrid::kMaxOrder) + "]");
    if (grid.grid_size < 1)
      problems.push_back("kan.grid_size must be >= 1");
    if (!(grid.range_min < grid.range_max))
      problems.push_back("kan.range_min must be < kan.range_max");
  }
  if (is_convolutional(family)) {
    if (channels.empty())
      problems.push_back("model.channels: convolutional families need at least one conv layer");
    if (kernel < 1 || stride < 1)
      problems.push_back("model.kernel and model.stride must be >= 1");
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == 0)
        problems.push_back("model.channels[" + std::to_string(i) + "] is zero");
    if (problems.empty()) {
      std::size_t length = input_length;
      std::vector<std::size_t> lengths{length};
      for (std::size_t i = 0; i < channels.size(); ++i) {
        if (length + 2 * padding < kernel) {
          problems.push_back("encoder conv layer " + std::to_string(i) + ": input length " +
                             std::to_string(length) + " is shorter than the kernel");
          break;
        }
        length = (length + 2 * padding - kernel) / stride + 1;
        lengths.push_back(length);
      }
      // Each transposed convolution must map L_{i+1} back to L_i exactly.
      for (std::size_t i = 0; problems.empty() && i + 1 < lengths.size(); ++i) {
        const long base = static_cast<long>((lengths[i + 1] - 1) * stride + kernel) - 2 * static_cast<long>(padding);
        const long extra = static_cast<long>(lengths[i]) - base;
        if (extra < 0 || extra >= static_cast<long>(stride))
          problems.push_back("decoder transposed conv layer " + std::to_string(lengths.size() - 2 - i) +
                             " cannot map length " + std::to_string(lengths[i + 1]) + " back to " +
                             std::to_string(lengths[i]));
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid model spec for " + std::string(family_name(family)) + ":";
    for (const auto& p : problems)
      msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

nlohmann::json to_json(const ModelSpec& s) {
  return {{"family", family_name(s.family)},
          {"input_length", s.input_length},
          {"latent_dim", s.latent_dim},
          {"hidden", s.hidden},
          {"channels", s.channels},
          {"kernel", s.kernel},
          {"stride", s.stride},
          {"padding", s.padding},
          {"grid",
           {{"order", s.grid.order},
            {"grid_size", s.grid.grid_size},
            {"range_min", s.grid.range_min},
            {"range_max", s.grid.range_max}}},
          {"batchnorm", s.batchnorm},
          {"dropout", s.dropout},
          {"dropout_rate", s.dropout_rate},
          {"variational", s.variational},
          {"kl_beta", s.kl_beta}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    const auto family = parse_family(j.at("family").get<std::string>());
    if (!family)
      throw ConfigError("unknown model family " + j.at("family").dump());
    ModelSpec s;
    s.family = *family;
    s.input_length = j.at("input_length").get<std::size_t>();
    s.latent_dim = j.at("latent_dim").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    s.channels = j.at("channels").get<std::vector<std::size_t>>();
    s.kernel = j.at("kernel").get<std::size_t>();
    s.stride = j.at("stride").get<std::size_t>();
    s.padding = j.at("padding").get<std::size_t>();
    const auto& g = j.at("grid");
    s.grid = {g.at("order").get<int>(), g.at("grid_size").get<int>(), g.at("range_min").get<double>(),
              g.at("range_max").get<double>()};
    s.batchnorm = j.at("batchnorm").get<bool>();
    s.dropout = j.at("dropout").get<bool>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.variational = j.at("variational").get<bool>();
    s.kl_beta = j.at("kl_beta").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model spec: ") + e.what());
  }
}

namespace {

std::size_t linear_params(std::size_t in, std::size_t out) { return in * out + out; }

} // namespace

std::size_t expected_param_count(const ModelSpec& s) {
  const std::size_t bn = s.batchnorm ? 2 : 0; // gamma and beta per feature/channel
  const std::size_t k = s.latent_dim;
  std::size_t total = 0;

  // Dense stack from `in` through `widths` to `out`: every width gets a block
  // (weights, bias, batchnorm); the last map is plain. `kan_first` swaps the
  // first block's linear map for a KAN layer (no bias).
  auto dense_stack = [&](std::size_t in, const std::vector<std::size_t>& widths, std::size_t out,
                         bool kan_first) {
    std::size_t count = 0;
    std::size_t prev = in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (i == 0 && kan_first)
        count += widths[i] * prev * (s.grid.num_basis() + 2);
      else
        count += linear_params(prev, widths[i]);
      count += bn * widths[i];
      prev = widths[i];
    }
    return count + linear_params(prev, out);
  };
  std::vector<std::size_t> reversed(s.hidden.rbegin(), s.hidden.rend());

  if (!is_convolutional(s.family)) {
    total += dense_stack(s.input_length, s.hidden, k, s.family == Family::kae);
    total += dense_stack(k, reversed, s.input_length, false);
  } else {
    const auto lengths = s.conv_lengths();
    const std::size_t w = s.kernel;
    std::size_t prev = 1;
    for (std::size_t c : s.channels) {
      total += s.family == Family::kcae ? c * prev * w * (s.grid.num_basis() + 2) : c * prev * w + c;
      total += bn * c;
      prev = c;
    }
    const std::size_t flat = s.channels.back() * lengths.back();
    total += dense_stack(flat, s.hidden, k, false);
    // Decoder dense part ends in a block (it feeds the transposed convs).
    std::size_t dense_prev = k;
    for (std::size_t width : reversed) {
      total += linear_params(dense_prev, width) + bn * width;
      dense_prev = width;
    }
    total += linear_params(dense_prev, flat) + bn * flat;
    for (std::size_t i = s.channels.size(); i-- > 0;) {
      const std::size_t cin = s.channels[i];
      const std::size_t cout = i == 0 ? 1 : s.channels[i - 1];
      total += cin * cout * w + cout;
      if (i != 0)
        total += bn * cout;
    }
  }
  if (s.variational)
    total += 2 * linear_params(k, k);
  return total;
}

} // namespace kanae::models
