#pragma once

#include "kanae/nn/layer.hpp"

namespace kanae::nn {

/// floor((length + 2*padding - kernel)/stride) + 1; ConfigError if < 1.
std::size_t conv_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

/// (length - 1)*stride - 2*padding + kernel + output_padding; ConfigError if < 1.
std::size_t conv_transpose_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                         std::size_t padding, std::size_t output_padding);

struct ConvGeometry {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0; // transposed convolution only
};

/// Cross-correlation (no kernel flip) on [batch x C_in x L] inputs.
/// Weight layout [C_out x C_in x kernel].
class Conv1d : public Layer {
public:
  explicit Conv1d(const ConvGeometry& geometry);
  Conv1d(const ConvGeometry& geometry, Rng& rng);

  std::string kind() const override { return "conv1d"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) override;

  const ConvGeometry& geometry() const noexcept { return geom_; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

private:
  ConvGeometry geom_;
  Parameter weight_;
  Parameter bias_;
  Tensor cols_; // im2col of the last input: [batch*L_out x C_in*kernel]
  std::size_t batch_ = 0;
  std::size_t in_length_ = 0;
  std::size_t out_length_ = 0;
  bool cached_ = false;
};

/// Adjoint of Conv1d, used for upsampling. Weight layout [C_in x C_out x kernel].
class ConvTranspose1d : public Layer {
public:
  explicit ConvTranspose1d(const ConvGeometry& geometry);
  ConvTranspose1d(const ConvGeometry& geometry, Rng& rng);

  std::string kind() const override { return "conv_transpose1d"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) override;

  const ConvGeometry& geometry() const noexcept { return geom_; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

private:
  ConvGeometry geom_;
  Parameter weight_;
  Parameter bias_;
  Tensor rows_; // input transposed to [batch*L_in x C_in]
  std::size_t batch_ = 0;
  std::size_t in_length_ = 0;
  std::size_t out_length_ = 0;
  bool cached_ = false;
};

} // namespace kanae::nn
