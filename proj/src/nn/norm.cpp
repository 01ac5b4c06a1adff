#include "kanae/nn/norm.hpp"

#include "kanae/error.hpp"

#include <cmath>

namespace kanae::nn {

namespace {

struct Layout {
  std::size_t batch;
  std::size_t channels;
  std::size_t length; // 1 for rank-2 inputs
};

Layout layout_of(const Tensor& t, std::size_t features) {
  if (t.rank() != 2 && t.rank() != 3)
    throw DimensionError("batchnorm: expected rank 2 or 3 input, got " + shape_string(t.shape()));
  if (t.dim(1) != features)
    throw DimensionError("batchnorm: expected " + std::to_string(features) + " features, got " +
                         std::to_string(t.dim(1)));
  return {t.dim(0), t.dim(1), t.rank() == 3 ? t.dim(2) : 1};
}

inline std::size_t offset(const Layout& l, std::size_t b, std::size_t c, std::size_t t) {
  return (b * l.channels + c) * l.length + t;
}

} // namespace

BatchNorm::BatchNorm(std::size_t features, double eps, double momentum)
    : features_(features), eps_(eps), momentum_(momentum), gamma_(Tensor({features}, 1.0)),
      beta_(Tensor({features}, 0.0)), running_mean_({features}, 0.0), running_var_({features}, 1.0) {
  if (!(eps > 0.0) || !(momentum > 0.0 && momentum <= 1.0))
    throw ConfigError("batchnorm: eps must be > 0 and momentum in (0, 1]");
}

Tensor BatchNorm::forward(const Tensor& input, RunContext& ctx) {
  const Layout l = layout_of(input, features_);
  const std::size_t count = l.batch * l.length;
  Tensor out(input.shape());
  Tensor normalized(input.shape());
  inv_std_.assign(features_, 0.0);

  if (ctx.training()) {
    if (l.batch < 2)
      throw ConfigError("batchnorm: training mode needs a batch of at least 2 samples");
    for (std::size_t c = 0; c < features_; ++c) {
      double mean = 0.0;
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t)
          mean += input[offset(l, b, c, t)];
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t) {
          const double d = input[offset(l, b, c, t)] - mean;
          var += d * d;
        }
      const double biased = var / static_cast<double>(count);
      const double unbiased = var / static_cast<double>(count - 1);
      const double inv_std = 1.0 / std::sqrt(biased + eps_);
      inv_std_[c] = inv_std;
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t) {
          const std::size_t i = offset(l, b, c, t);
          normalized[i] = (input[i] - mean) * inv_std;
          out[i] = gamma_.value[c] * normalized[i] + beta_.value[c];
        }
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < features_; ++c) {
      const double inv_std = 1.0 / std::sqrt(running_var_[c] + eps_);
      inv_std_[c] = inv_std;
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t) {
          const std::size_t i = offset(l, b, c, t);
          normalized[i] = (input[i] - running_mean_[c]) * inv_std;
          out[i] = gamma_.value[c] * normalized[i] + beta_.value[c];
        }
    }
  }
  normalized_ = std::move(normalized);
  cached_train_ = ctx.training();
  cached_ = true;
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_output) {
  require_forward(cached_, "batchnorm");
  if (!grad_output.same_shape(normalized_))
    throw DimensionError("batchnorm backward: gradient shape " + shape_string(grad_output.shape()));
  const Layout l = layout_of(grad_output, features_);
  const double count = static_cast<double>(l.batch * l.length);
  Tensor grad_input(grad_output.shape());

  for (std::size_t c = 0; c < features_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < l.batch; ++b)
      for (std::size_t t = 0; t < l.length; ++t) {
        const std::size_t i = offset(l, b, c, t);
        sum_dy += grad_output[i];
        sum_dy_xhat += grad_output[i] * normalized_[i];
      }
    gamma_.grad[c] += sum_dy_xhat;
    beta_.grad[c] += sum_dy;

    const double g = gamma_.value[c];
    const double inv_std = inv_std_[c];
    if (cached_train_) {
      // dx = inv_std/N * (N*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)), dxhat = g*dy
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t) {
          const std::size_t i = offset(l, b, c, t);
          grad_input[i] = g * inv_std / count *
                          (count * grad_output[i] - sum_dy - normalized_[i] * sum_dy_xhat);
        }
    } else {
      for (std::size_t b = 0; b < l.batch; ++b)
        for (std::size_t t = 0; t < l.length; ++t) {
          const std::size_t i = offset(l, b, c, t);
          grad_input[i] = g * inv_std * grad_output[i];
        }
    }
  }
  return grad_input;
}

void BatchNorm::collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({join_name(prefix, "gamma"), &gamma_});
  out.push_back({join_name(prefix, "beta"), &beta_});
}

void BatchNorm::collect_buffers(std::vector<BufferRef>& out, const std::string& prefix) {
  out.push_back({join_name(prefix, "running_mean"), &running_mean_});
  out.push_back({join_name(prefix, "running_var"), &running_var_});
}

// ---------------------------------------------------------------------------

Dropout::Dropout(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0))
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(p));
}

Tensor Dropout::forward(const Tensor& input, RunContext& ctx) {
  cached_ = true;
  if (!ctx.training() || p_ == 0.0) {
    scale_.clear();
    return input;
  }
  if (ctx.rng == nullptr)
    throw StateError("dropout: train-mode forward needs a random generator");
  const double keep_scale = 1.0 / (1.0 - p_);
  std::bernoulli_distribution drop(p_);
  scale_.resize(input.size());
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    scale_[i] = drop(*ctx.rng) ? 0.0 : keep_scale;
    out[i] = input[i] * scale_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_output) {
  require_forward(cached_, "dropout");
  if (scale_.empty())
    return grad_output;
  if (grad_output.size() != scale_.size())
    throw DimensionError("dropout backward: gradient shape " + shape_string(grad_output.shape()));
  Tensor grad_input(grad_output.shape());
  for (std::size_t i = 0; i < grad_output.size(); ++i)
    grad_input[i] = grad_output[i] * scale_[i];
  return grad_input;
}

} // namespace kanae::nn
