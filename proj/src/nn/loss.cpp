#include "kanae/nn/loss.hpp"

#include "kanae/error.hpp"
#include "kanae/simd/kernels.hpp"

#include <cmath>

namespace kanae::nn {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(who) + ": shape " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  if (a.rank() < 1)
    throw DimensionError(std::string(who) + ": tensors need a batch axis");
}

} // namespace

LossValue mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same(prediction, target, "mse_loss");
  const std::size_t batch = prediction.dim(0);
  const std::size_t per = prediction.size() / batch;
  const auto& k = simd::kernels();
  LossValue loss;
  loss.per_sample.resize(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double s = k.squared_distance(prediction.data() + b * per, target.data() + b * per, per);
    loss.per_sample[b] = s / static_cast<double>(per);
    total += loss.per_sample[b];
  }
  loss.value = total / static_cast<double>(batch);
  return loss;
}

Tensor mse_gradient(const Tensor& prediction, const Tensor& target) {
  require_same(prediction, target, "mse_gradient");
  const double scale = 2.0 / static_cast<double>(prediction.size());
  Tensor grad(prediction.shape());
  for (std::size_t i = 0; i < prediction.size(); ++i)
    grad[i] = scale * (prediction[i] - target[i]);
  return grad;
}

LossValue kl_divergence(const Tensor& mu, const Tensor& logvar) {
  require_same(mu, logvar, "kl_divergence");
  const std::size_t batch = mu.dim(0);
  const std::size_t per = mu.size() / batch;
  LossValue loss;
  loss.per_sample.resize(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double s = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      const double m = mu[b * per + j];
      const double lv = logvar[b * per + j];
      s += 1.0 + lv - m * m - std::exp(lv);
    }
    loss.per_sample[b] = -0.5 * s;
    total += loss.per_sample[b];
  }
  loss.value = total / static_cast<double>(batch);
  return loss;
}

KlGradient kl_gradient(const Tensor& mu, const Tensor& logvar) {
  require_same(mu, logvar, "kl_gradient");
  const double inv_batch = 1.0 / static_cast<double>(mu.dim(0));
  KlGradient g{Tensor(mu.shape()), Tensor(logvar.shape())};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    g.mu[i] = mu[i] * inv_batch;
    g.logvar[i] = 0.5 * (std::exp(logvar[i]) - 1.0) * inv_batch;
  }
  return g;
}

} // namespace kanae::nn
