#pragma once

#include "kanae/nn/layer.hpp"

#include <memory>
#include <optional>
#include <string_view>

namespace kanae::optim {

enum class OptimizerKind { adam, sgd };

std::string_view optimizer_name(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.0; // SGD only
};

/// Updates a fixed, ordered parameter list. State is bound to the list
/// given on the first step; later steps must pass the same list.
class Optimizer {
public:
  virtual ~Optimizer() = default;

  /// Throws NumericError naming the parameter if a gradient is not finite.
  virtual void step(const std::vector<nn::ParamRef>& params) = 0;

  std::uint64_t steps() const noexcept { return steps_; }

protected:
  void check(const std::vector<nn::ParamRef>& params);

  std::uint64_t steps_ = 0;
  std::size_t bound_count_ = 0;
};

/// Bias-corrected Adam.
class Adam : public Optimizer {
public:
  explicit Adam(const OptimizerConfig& config);
  void step(const std::vector<nn::ParamRef>& params) override;

  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
  OptimizerConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Plain or heavy-ball SGD.
class Sgd : public Optimizer {
public:
  explicit Sgd(const OptimizerConfig& config);
  void step(const std::vector<nn::ParamRef>& params) override;

private:
  OptimizerConfig cfg_;
  std::vector<Tensor> velocity_;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config);

} // namespace kanae::optim
