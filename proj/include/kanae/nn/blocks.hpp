#pragma once

#include "kanae/nn/activation.hpp"
#include "kanae/nn/conv.hpp"

#include <memory>

namespace kanae::nn {

struct BlockOptions {
  bool batchnorm = true;
  bool dropout = false;
  double dropout_rate = 0.1;
};

/// Linear -> [BatchNorm] -> SiLU -> [Dropout]
std::unique_ptr<Sequential> make_linear_block(std::size_t in, std::size_t out, const BlockOptions& opts,
                                              Rng& rng, const std::string& name = "linear_block");

/// Conv1d -> [BatchNorm] -> Tanh -> [Dropout]
std::unique_ptr<Sequential> make_conv_block(const ConvGeometry& geometry, const BlockOptions& opts, Rng& rng,
                                            const std::string& name = "conv_block");

/// ConvTranspose1d -> [BatchNorm] -> Tanh -> [Dropout]
std::unique_ptr<Sequential> make_conv_transpose_block(const ConvGeometry& geometry, const BlockOptions& opts,
                                                      Rng& rng, const std::string& name = "deconv_block");

} // namespace kanae::nn
