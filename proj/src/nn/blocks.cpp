#include "kanae/nn/blocks.hpp"

#include "kanae/nn/linear.hpp"
#include "kanae/nn/norm.hpp"

namespace kanae::nn {

namespace {

void add_tail(Sequential& block, std::size_t features, ActivationKind act, const BlockOptions& opts) {
  if (opts.batchnorm)
    block.emplace<BatchNorm>(features);
  block.emplace<Activation>(act);
  if (opts.dropout)
    block.emplace<Dropout>(opts.dropout_rate);
}

} // namespace

std::unique_ptr<Sequential> make_linear_block(std::size_t in, std::size_t out, const BlockOptions& opts,
                                              Rng& rng, const std::string& name) {
  auto block = std::make_unique<Sequential>(name);
  block->emplace<Linear>(in, out, rng);
  add_tail(*block, out, ActivationKind::silu, opts);
  return block;
}

std::unique_ptr<Sequential> make_conv_block(const ConvGeometry& geometry, const BlockOptions& opts, Rng& rng,
                                            const std::string& name) {
  auto block = std::make_unique<Sequential>(name);
  block->emplace<Conv1d>(geometry, rng);
  add_tail(*block, geometry.out_channels, ActivationKind::tanh, opts);
  return block;
}

std::unique_ptr<Sequential> make_conv_transpose_block(const ConvGeometry& geometry, const BlockOptions& opts,
                                                      Rng& rng, const std::string& name) {
  auto block = std::make_unique<Sequential>(name);
  block->emplace<ConvTranspose1d>(geometry, rng);
  add_tail(*block, geometry.out_channels, ActivationKind::tanh, opts);
  return block;
}

} // namespace kanae::nn
