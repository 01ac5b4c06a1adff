#pragma once

#include "kanae/nn/layer.hpp"

namespace kanae::nn {

/// Batch normalization over the batch axis of [batch x F] inputs, or over
/// batch and length of [batch x C x L] inputs (per channel).
///
/// Train mode normalizes with biased batch statistics and folds the unbiased
/// variance into the running estimates; eval mode uses the running estimates.
class BatchNorm : public Layer {
public:
  explicit BatchNorm(std::size_t features, double eps = 1e-5, double momentum = 0.1);

  std::string kind() const override { return "batchnorm"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) override;
  void collect_buffers(std::vector<BufferRef>& out, const std::string& prefix) override;

  std::size_t features() const noexcept { return features_; }
  Parameter& gamma() noexcept { return gamma_; }
  Parameter& beta() noexcept { return beta_; }
  Tensor& running_mean() noexcept { return running_mean_; }
  Tensor& running_var() noexcept { return running_var_; }

private:
  std::size_t features_;
  double eps_;
  double momentum_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;

  Tensor normalized_;
  std::vector<double> inv_std_;
  bool cached_train_ = false;
  bool cached_ = false;
};

/// Inverted dropout: zeroes entries with probability p and scales survivors
/// by 1/(1-p) in train mode; identity in eval mode.
class Dropout : public Layer {
public:
  explicit Dropout(double p);

  std::string kind() const override { return "dropout"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;

  double rate() const noexcept { return p_; }

private:
  double p_;
  std::vector<double> scale_; // empty when the last forward was the identity
  bool cached_ = false;
};

} // namespace kanae::nn
