#pragma once

#include "kanae/models/model.hpp"
#include "kanae/optim/optimizer.hpp"

#include <functional>
#include <span>

namespace kanae::optim {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 16;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  /// Variational models draw z = mu + sigma*eps while training; false pins eps = 0.
  bool sample_latent = true;
  /// Weight of the spline smoothness penalty sum (c_{m+1} - c_m)^2 over every
  /// KAN edge; 0 disables it.
  double smoothness = 0.0;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

/// Rewrites one training input in place (the clean target is untouched).
/// Called with the sample index and epoch so corruption can be reseeded
/// per (seed, epoch, sample).
using InputTransform = std::function<void(std::span<double> series, std::size_t sample, std::size_t epoch)>;

/// Observes each finished epoch; returning false ends training early.
using EpochCallback = std::function<bool(std::size_t epoch, double mean_loss)>;

struct LossTrace {
  std::vector<double> epoch_loss;    // sample-weighted mean training loss per epoch
  std::vector<double> epoch_seconds; // wall clock per epoch
};

/// Minibatch training on rows of `data` (targets are the clean rows).
/// Each epoch visits a seeded permutation; a short final batch is kept when
/// it holds at least two samples. Deterministic given the config.
/// Throws NumericError naming epoch and batch if the loss is not finite.
LossTrace train(models::Model& model, const Tensor& data, const TrainConfig& config,
                const InputTransform& transform = {}, const EpochCallback& on_epoch = {});

/// Per-sample reconstruction MSE in eval mode, mapping `inputs` to `targets`.
std::vector<double> evaluate_losses(models::Model& model, const Tensor& inputs, const Tensor& targets,
                                    std::size_t batch_size = 64);

/// Eval-mode model output for every row of `inputs`.
Tensor reconstruct(models::Model& model, const Tensor& inputs, std::size_t batch_size = 64);

/// Eval-mode latent codes (mu for variational models).
Tensor encode_all(models::Model& model, const Tensor& inputs, std::size_t batch_size = 64);

/// Rows `indices` of a rank-2 tensor.
Tensor gather_rows(const Tensor& data, std::span<const std::size_t> indices);

} // namespace kanae::optim
