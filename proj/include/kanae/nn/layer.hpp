#pragma once

#include "kanae/tensor.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace kanae::nn {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); streams separate e.g. weight
/// init, shuffling and dropout so changing one never shifts another.
Rng seeded_rng(std::uint64_t seed, std::uint64_t stream);

enum class Mode { train, eval };

/// Per-call state threaded through forward passes.
struct RunContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr; // required by stochastic layers in train mode

  bool training() const noexcept { return mode == Mode::train; }
};

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  Tensor value;
  Tensor grad;

  Parameter() = default;
  explicit Parameter(Tensor v) : value(std::move(v)), grad(Tensor::zeros_like(value)) {}
};

struct ParamRef {
  std::string name;
  Parameter* param;
};

/// Non-trainable state that still belongs in checkpoints (e.g. running stats).
struct BufferRef {
  std::string name;
  Tensor* value;
};

/// Forward/backward contract shared by every layer.
///
/// forward() caches what backward() needs; backward() accumulates into the
/// parameter gradients and returns the gradient with respect to the input of
/// the most recent forward() call.
class Layer {
public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& input, RunContext& ctx) = 0;
  virtual Tensor backward(const Tensor& grad_output) = 0;

  virtual void collect_parameters(std::vector<ParamRef>& /*out*/, const std::string& /*prefix*/) {}
  virtual void collect_buffers(std::vector<BufferRef>& /*out*/, const std::string& /*prefix*/) {}

  std::vector<ParamRef> parameters(const std::string& prefix = "");
  std::vector<BufferRef> buffers(const std::string& prefix = "");
  void zero_grad();
  std::size_t param_count();
};

std::string join_name(const std::string& prefix, const std::string& name);

/// Throws StateError when backward is called without a cached forward.
void require_forward(bool cached, const std::string& layer);

/// Ordered chain of layers. Forward output of every child is checked for
/// NaN/Inf and the error names the offending child.
class Sequential : public Layer {
public:
  Sequential() = default;
  explicit Sequential(std::string name) : name_(std::move(name)) {}

  Sequential& add(std::unique_ptr<Layer> layer);

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }

  std::string kind() const override { return "sequential"; }
  Tensor forward(const Tensor& input, RunContext& ctx) override;
  Tensor backward(const Tensor& grad_output) override;
  void collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) override;
  void collect_buffers(std::vector<BufferRef>& out, const std::string& prefix) override;

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }
  const std::string& name() const noexcept { return name_; }

private:
  std::string name_ = "sequential";
  std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace kanae::nn
