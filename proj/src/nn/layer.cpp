#include "kanae/nn/layer.hpp"

#include "kanae/error.hpp"

namespace kanae::nn {

Rng seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::vector<ParamRef> Layer::parameters(const std::string& prefix) {
  std::vector<ParamRef> out;
  collect_parameters(out, prefix);
  return out;
}

std::vector<BufferRef> Layer::buffers(const std::string& prefix) {
  std::vector<BufferRef> out;
  collect_buffers(out, prefix);
  return out;
}

void Layer::zero_grad() {
  for (auto& p : parameters())
    p.param->grad.fill(0.0);
}

std::size_t Layer::param_count() {
  std::size_t n = 0;
  for (auto& p : parameters())
    n += p.param->value.size();
  return n;
}

std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

void require_forward(bool cached, const std::string& layer) {
  if (!cached)
    throw StateError(layer + ": backward called before forward");
}

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Tensor Sequential::forward(const Tensor& input, RunContext& ctx) {
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, ctx);
    if (!x.all_finite())
      throw NumericError("non-finite output in layer " + name_ + "." + std::to_string(i) + " (" +
                         layers_[i]->kind() + ")");
  }
  return x;
}

Tensor Sequential::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;)
    g = layers_[i]->backward(g);
  return g;
}

void Sequential::collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_parameters(out, join_name(prefix, std::to_string(i)));
}

void Sequential::collect_buffers(std::vector<BufferRef>& out, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect_buffers(out, join_name(prefix, std::to_string(i)));
}

} // namespace kanae::nn
