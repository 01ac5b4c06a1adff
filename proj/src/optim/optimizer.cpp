#include "kanae/optim/optimizer.hpp"

#include "kanae/error.hpp"
#include "kanae/simd/kernels.hpp"

#include <cmath>

namespace kanae::optim {

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  if (name == "adam")
    return OptimizerKind::adam;
  if (name == "sgd")
    return OptimizerKind::sgd;
  return std::nullopt;
}

void Optimizer::check(const std::vector<nn::ParamRef>& params) {
  if (steps_ == 0)
    bound_count_ = params.size();
  else if (params.size() != bound_count_)
    throw StateError("optimizer stepped with " + std::to_string(params.size()) + " parameters, bound to " +
                     std::to_string(bound_count_));
  for (const auto& p : params)
    if (!p.param->grad.all_finite())
      throw NumericError("non-finite gradient in " + p.name);
}

Adam::Adam(const OptimizerConfig& config) : cfg_(config) {
  if (!(config.lr > 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0))
    throw ConfigError("adam: need lr > 0, beta1/beta2 in [0, 1), eps > 0");
}

void Adam::step(const std::vector<nn::ParamRef>& params) {
  check(params);
  if (m_.empty())
    for (const auto& p : params) {
      m_.push_back(Tensor::zeros_like(p.param->value));
      v_.push_back(Tensor::zeros_like(p.param->value));
    }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const simd::AdamCoeffs c{cfg_.lr,
                           cfg_.beta1,
                           cfg_.beta2,
                           cfg_.eps,
                           1.0 - std::pow(cfg_.beta1, t),
                           1.0 - std::pow(cfg_.beta2, t)};
  const simd::KernelTable& k = simd::kernels();
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Parameter& p = *params[i].param;
    k.adam_update(p.value.data(), p.grad.data(), m_[i].data(), v_[i].data(), p.value.size(), c);
  }
}

Sgd::Sgd(const OptimizerConfig& config) : cfg_(config) {
  if (!(config.lr > 0.0) || !(config.momentum >= 0.0 && config.momentum < 1.0))
    throw ConfigError("sgd: need lr > 0 and momentum in [0, 1)");
}

void Sgd::step(const std::vector<nn::ParamRef>& params) {
  check(params);
  if (velocity_.empty())
    for (const auto& p : params)
      velocity_.push_back(Tensor::zeros_like(p.param->value));
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Parameter& p = *params[i].param;
    Tensor& vel = velocity_[i];
    for (std::size_t j = 0; j < vel.size(); ++j) {
      vel[j] = cfg_.momentum * vel[j] + p.grad[j];
      p.value[j] -= cfg_.lr * vel[j];
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config) {
  if (config.kind == OptimizerKind::sgd)
    return std::make_unique<Sgd>(config);
  return std::make_unique<Adam>(config);
}

} // namespace kanae::optim
