#include "kanae/optim/train.hpp"

#include "kanae/error.hpp"
#include "kanae/kan/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace kanae::optim {

namespace {

constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;
constexpr std::uint64_t kLatentStream = 4;

template <typename Fn>
Tensor map_batches(const Tensor& inputs, std::size_t batch_size, std::size_t out_width, Fn&& fn) {
  require_rank(inputs, 2, "batched input");
  const std::size_t n = inputs.dim(0);
  Tensor out({n, out_width});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor result = fn(gather_rows(inputs, idx));
    std::copy(result.values().begin(), result.values().end(), out.data() + start * out_width);
  }
  return out;
}

} // namespace

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (epochs < 1)
    problems.push_back("train.epochs must be >= 1");
  if (batch_size < 2)
    problems.push_back("train.batch_size must be >= 2 (batch normalization needs two samples)");
  if (!(optimizer.lr > 0.0))
    problems.push_back("train.lr must be > 0");
  if (!(smoothness >= 0.0))
    problems.push_back("train.smoothness must be >= 0");
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems)
      msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

Tensor gather_rows(const Tensor& data, std::span<const std::size_t> indices) {
  require_rank(data, 2, "gather_rows");
  const std::size_t width = data.dim(1);
  Tensor out({indices.size(), width});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = data.row(indices[r]);
    std::copy(src.begin(), src.end(), out.data() + r * width);
  }
  return out;
}

LossTrace train(models::Model& model, const Tensor& data, const TrainConfig& config,
                const InputTransform& transform, const EpochCallback& on_epoch) {
  config.validate();
  require_rank(data, 2, "training data");
  const std::size_t n = data.dim(0);
  if (n < 2)
    throw ConfigError("training needs at least two samples, got " + std::to_string(n));

  nn::Rng shuffle_rng = nn::seeded_rng(config.seed, kShuffleStream);
  nn::Rng dropout_rng = nn::seeded_rng(config.seed, kDropoutStream);
  nn::Rng latent_rng = nn::seeded_rng(config.seed, kLatentStream);
  auto optimizer = make_optimizer(config.optimizer);
  const auto params = model.parameters();
  std::vector<nn::Parameter*> spline_coeffs;
  for (const auto& p : params)
    if (p.name.ends_with(".spline_coeffs"))
      spline_coeffs.push_back(p.param);
  const std::size_t num_basis = model.spec().grid.num_basis();
  nn::RunContext ctx{nn::Mode::train, &dropout_rng};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  LossTrace trace;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    std::size_t seen = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      if (stop - start < 2)
        break;
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Tensor target = gather_rows(data, idx);
      Tensor input = target;
      if (transform) {
        const std::size_t width = data.dim(1);
        for (std::size_t r = 0; r < idx.size(); ++r)
          transform(std::span<double>(input.data() + r * width, width), idx[r], epoch);
      }
      model.zero_grad();
      nn::Rng* noise = config.sample_latent && model.spec().variational ? &latent_rng : nullptr;
      models::LossBreakdown loss;
      try {
        loss = model.loss_and_backward(input, target, ctx, noise);
        if (config.smoothness > 0.0)
          for (nn::Parameter* c : spline_coeffs)
            loss.total += kan::smoothness_penalty(c->value.values(), num_basis, config.smoothness, c->grad.values());
        if (!std::isfinite(loss.total))
          throw NumericError("non-finite training loss");
        optimizer->step(params);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      weighted += loss.total * static_cast<double>(idx.size());
      seen += idx.size();
    }
    trace.epoch_loss.push_back(weighted / static_cast<double>(seen));
    trace.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (on_epoch && !on_epoch(epoch, trace.epoch_loss.back()))
      break;
  }
  return trace;
}

Tensor reconstruct(models::Model& model, const Tensor& inputs, std::size_t batch_size) {
  nn::RunContext ctx{nn::Mode::eval, nullptr};
  return map_batches(inputs, batch_size, model.spec().input_length,
                     [&](const Tensor& batch) { return model.forward(batch, ctx); });
}

Tensor encode_all(models::Model& model, const Tensor& inputs, std::size_t batch_size) {
  nn::RunContext ctx{nn::Mode::eval, nullptr};
  return map_batches(inputs, batch_size, model.spec().latent_dim,
                     [&](const Tensor& batch) { return model.encode(batch, ctx); });
}

std::vector<double> evaluate_losses(models::Model& model, const Tensor& inputs, const Tensor& targets,
                                    std::size_t batch_size) {
  if (!inputs.same_shape(targets))
    throw DimensionError("evaluate_losses: input shape " + shape_string(inputs.shape()) + " vs target " +
                         shape_string(targets.shape()));
  return nn::mse_loss(reconstruct(model, inputs, batch_size), targets).per_sample;
}

} // namespace kanae::optim
