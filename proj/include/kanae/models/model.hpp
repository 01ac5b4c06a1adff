#pragma once

#include "kanae/models/spec.hpp"
#include "kanae/nn/layer.hpp"
#include "kanae/nn/loss.hpp"

#include <filesystem>
#include <memory>

namespace kanae::models {

/// Outputs of one forward pass. For non-variational models mu is the
/// encoder output and logvar is empty.
struct ForwardResult {
  Tensor reconstruction;
  Tensor z;
  Tensor mu;
  Tensor logvar;
};

struct LossBreakdown {
  double total = 0.0;
  nn::LossValue reconstruction;
  double kl = 0.0;
};

/// An autoencoder over [batch x n] signals.
///
/// As a Layer, forward() returns the reconstruction. A variational model
/// samples z = mu + exp(logvar/2) * eps in train mode (eps drawn from the
/// context generator) and uses z = mu in eval mode.
class Model : public nn::Layer {
public:
  /// Deterministic initialization from `seed`.
  static std::unique_ptr<Model> build(const ModelSpec& spec, std::uint64_t seed);

  /// Rebuilds the architecture recorded in a checkpoint and restores its tensors.
  static std::unique_ptr<Model> load(const std::filesystem::path& checkpoint);

  std::string kind() const override { return "autoencoder"; }
  Tensor forward(const Tensor& input, nn::RunContext& ctx) override;
  Tensor backward(const Tensor& grad_reconstruction) override;
  void collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) override;
  void collect_buffers(std::vector<nn::BufferRef>& out, const std::string& prefix) override;

  /// Full forward pass. `noise` supplies eps for variational sampling; with
  /// nullptr z = mu.
  ForwardResult forward_full(const Tensor& input, nn::RunContext& ctx, nn::Rng* noise);

  /// Variational forward with eps drawn from a generator seeded by `seed`.
  ForwardResult forward_vae(const Tensor& input, nn::RunContext& ctx, std::uint64_t seed);

  /// Backward through the last forward pass. `kl` (scaled by `beta`) is added
  /// to the head gradients when given.
  Tensor backward_full(const Tensor& grad_reconstruction, const nn::KlGradient* kl, double beta);

  /// Forward, MSE(+beta*KL) against `target`, and backward. Gradients are
  /// accumulated, not zeroed.
  LossBreakdown loss_and_backward(const Tensor& input, const Tensor& target, nn::RunContext& ctx,
                                  nn::Rng* noise);

  /// Latent code (mu for variational models).
  Tensor encode(const Tensor& input, nn::RunContext& ctx);
  Tensor decode(const Tensor& latent, nn::RunContext& ctx);

  const ModelSpec& spec() const noexcept { return spec_; }

  void save(const std::filesystem::path& path, const nlohmann::json& extra_metadata = {});

private:
  Model(ModelSpec spec, std::uint64_t seed);

  ModelSpec spec_;
  std::unique_ptr<nn::Sequential> encoder_;
  std::unique_ptr<nn::Sequential> decoder_;
  std::unique_ptr<nn::Layer> mu_head_;
  std::unique_ptr<nn::Layer> logvar_head_;

  // Cached for backward.
  Tensor eps_;
  Tensor logvar_;
  bool sampled_ = false;
  bool cached_ = false;
};

} // namespace kanae::models
