#pragma once

#include "kanae/nn/layer.hpp"

namespace kanae::nn {

/// y = x W^T + b on [batch x in] inputs. W is [out x in].
class Linear : public Layer {
public:
  /// Zero-initialized weights.
  Linear(std::size_t in_features, std::size_t out_features);
  /// Weights and bias ~ U(-1/sqrt(in), 1/sqrt(in)).
  Linear(std::size_t in_features, std::size_t out_features, Rng& rng);

  std::string kind() const override { return "linear"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) override;

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  Parameter& weight() noexcept { return weight_; }
  Parameter& bias() noexcept { return bias_; }

private:
  std::size_t in_;
  std::size_t out_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
  bool cached_ = false;
};

} // namespace kanae::nn
