#pragma once

#include "kanae/tensor.hpp"

#include <vector>

namespace kanae::nn {

/// Scalar loss plus its per-sample breakdown; `value` is the batch mean of
/// `per_sample`.
struct LossValue {
  double value = 0.0;
  std::vector<double> per_sample;
};

/// Per sample: mean squared difference over that sample's elements.
/// Scalar: mean over the batch (leading axis).
LossValue mse_loss(const Tensor& prediction, const Tensor& target);

/// d(mse_loss(...).value) / d prediction.
Tensor mse_gradient(const Tensor& prediction, const Tensor& target);

/// KL( N(mu, exp(logvar)) || N(0, 1) ) summed over latent dims per sample:
/// -1/2 * sum(1 + logvar - mu^2 - exp(logvar)).
LossValue kl_divergence(const Tensor& mu, const Tensor& logvar);

struct KlGradient {
  Tensor mu;
  Tensor logvar;
};

/// Gradient of kl_divergence(...).value.
KlGradient kl_gradient(const Tensor& mu, const Tensor& logvar);

} // namespace kanae::nn
