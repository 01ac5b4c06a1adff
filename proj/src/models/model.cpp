#include "kanae/models/model.hpp"

#include "kanae/error.hpp"
#include "kanae/kan/kan_layers.hpp"
#include "kanae/nn/activation.hpp"
#include "kanae/nn/blocks.hpp"
#include "kanae/nn/checkpoint.hpp"
#include "kanae/nn/linear.hpp"
#include "kanae/nn/norm.hpp"

#include <cmath>

namespace kanae::models {

namespace {

constexpr std::uint64_t kInitStream = 1;

// Dense blocks through `widths`, then a plain linear map to `out`.
void add_dense_stack(nn::Sequential& seq, std::size_t in, const std::vector<std::size_t>& widths,
                     std::size_t out, const nn::BlockOptions& opts, nn::Rng& rng) {
  std::size_t prev = in;
  for (std::size_t w : widths) {
    seq.add(nn::make_linear_block(prev, w, opts, rng));
    prev = w;
  }
  seq.emplace<nn::Linear>(prev, out, rng);
}

// KAN layer -> [BatchNorm] -> [Dropout]. The edge functions carry the
// nonlinearity, so no separate activation follows.
template <typename KanLayer, typename... Args>
std::unique_ptr<nn::Sequential> make_kan_block(std::size_t features, const nn::BlockOptions& opts,
                                               const std::string& name, Args&&... args) {
  auto block = std::make_unique<nn::Sequential>(name);
  block->emplace<KanLayer>(std::forward<Args>(args)...);
  if (opts.batchnorm)
    block->emplace<nn::BatchNorm>(features);
  if (opts.dropout)
    block->emplace<nn::Dropout>(opts.dropout_rate);
  return block;
}

} // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  const ModelSpec& s = spec_;
  nn::Rng rng = nn::seeded_rng(seed, kInitStream);
  const nn::BlockOptions enc{s.batchnorm, s.dropout && s.dropout_rate > 0.0, s.dropout_rate};
  const nn::BlockOptions dec{s.batchnorm, false, 0.0};
  encoder_ = std::make_unique<nn::Sequential>("encoder");
  decoder_ = std::make_unique<nn::Sequential>("decoder");
  std::vector<std::size_t> reversed(s.hidden.rbegin(), s.hidden.rend());

  if (!is_convolutional(s.family)) {
    std::vector<std::size_t> widths = s.hidden;
    std::size_t in = s.input_length;
    if (s.family == Family::kae) {
      encoder_->add(make_kan_block<kan::KanLinear>(widths.front(), enc, "kan_block", in, widths.front(),
                                                   s.grid.make(), nn::ActivationKind::identity, rng));
      in = widths.front();
      widths.erase(widths.begin());
    }
    add_dense_stack(*encoder_, in, widths, s.latent_dim, enc, rng);
    add_dense_stack(*decoder_, s.latent_dim, reversed, s.input_length, dec, rng);
  } else {
    const auto lengths = s.conv_lengths();
    const std::size_t flat = s.channels.back() * lengths.back();
    encoder_->emplace<nn::Reshape>(Shape{1, s.input_length});
    std::size_t prev = 1;
    for (std::size_t c : s.channels) {
      const nn::ConvGeometry g{prev, c, s.kernel, s.stride, s.padding, 0};
      if (s.family == Family::kcae)
        encoder_->add(make_kan_block<kan::KanConv1d>(c, enc, "kan_conv_block", g, s.grid.make(), rng));
      else
        encoder_->add(nn::make_conv_block(g, enc, rng));
      prev = c;
    }
    encoder_->emplace<nn::Reshape>(Shape{flat});
    add_dense_stack(*encoder_, flat, s.hidden, s.latent_dim, enc, rng);

    std::size_t dense_prev = s.latent_dim;
    for (std::size_t w : reversed) {
      decoder_->add(nn::make_linear_block(dense_prev, w, dec, rng));
      dense_prev = w;
    }
    decoder_->add(nn::make_linear_block(dense_prev, flat, dec, rng));
    decoder_->emplace<nn::Reshape>(Shape{s.channels.back(), lengths.back()});
    for (std::size_t i = s.channels.size(); i-- > 0;) {
      const std::size_t cin = s.channels[i];
      const std::size_t cout = i == 0 ? 1 : s.channels[i - 1];
      const std::size_t base =
          nn::conv_transpose_output_length(lengths[i + 1], s.kernel, s.stride, s.padding, 0);
      const nn::ConvGeometry g{cin, cout, s.kernel, s.stride, s.padding, lengths[i] - base};
      if (i == 0)
        decoder_->emplace<nn::ConvTranspose1d>(g, rng);
      else
        decoder_->add(nn::make_conv_transpose_block(g, dec, rng));
    }
    decoder_->emplace<nn::Reshape>(Shape{s.input_length});
  }

  if (s.variational) {
    mu_head_ = std::make_unique<nn::Linear>(s.latent_dim, s.latent_dim, rng);
    logvar_head_ = std::make_unique<nn::Linear>(s.latent_dim, s.latent_dim, rng);
  }
}

std::unique_ptr<Model> Model::build(const ModelSpec& spec, std::uint64_t seed) {
  return std::unique_ptr<Model>(new Model(spec, seed));
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& checkpoint) {
  nn::CheckpointContents contents = nn::read_checkpoint(checkpoint);
  const auto& meta = contents.header.at("metadata");
  if (!meta.contains("model_spec"))
    throw ParseError(checkpoint.string() + ": checkpoint metadata has no model_spec");
  auto model = build(spec_from_json(meta.at("model_spec")), 0);
  nn::restore_checkpoint(contents, model->parameters(), model->buffers());
  return model;
}

void Model::collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) {
  encoder_->collect_parameters(out, nn::join_name(prefix, "encoder"));
  decoder_->collect_parameters(out, nn::join_name(prefix, "decoder"));
  if (spec_.variational) {
    mu_head_->collect_parameters(out, nn::join_name(prefix, "head_mu"));
    logvar_head_->collect_parameters(out, nn::join_name(prefix, "head_logvar"));
  }
}

void Model::collect_buffers(std::vector<nn::BufferRef>& out, const std::string& prefix) {
  encoder_->collect_buffers(out, nn::join_name(prefix, "encoder"));
  decoder_->collect_buffers(out, nn::join_name(prefix, "decoder"));
}

ForwardResult Model::forward_full(const Tensor& input, nn::RunContext& ctx, nn::Rng* noise) {
  require_rank(input, 2, "model input");
  if (input.dim(1) != spec_.input_length)
    throw DimensionError("model expects series of length " + std::to_string(spec_.input_length) + ", got " +
                         std::to_string(input.dim(1)));
  ForwardResult r;
  Tensor h = encoder_->forward(input, ctx);
  sampled_ = false;
  if (spec_.variational) {
    r.mu = mu_head_->forward(h, ctx);
    r.logvar = logvar_head_->forward(h, ctx);
    require_finite(r.logvar, "head_logvar");
    r.z = r.mu;
    if (noise != nullptr) {
      std::normal_distribution<double> normal(0.0, 1.0);
      eps_ = Tensor(r.mu.shape());
      for (std::size_t i = 0; i < r.z.size(); ++i) {
        eps_[i] = normal(*noise);
        r.z[i] += std::exp(0.5 * r.logvar[i]) * eps_[i];
      }
      require_finite(r.z, "latent sample");
      sampled_ = true;
    }
    logvar_ = r.logvar;
  } else {
    r.mu = h;
    r.z = std::move(h);
  }
  r.reconstruction = decoder_->forward(r.z, ctx);
  cached_ = true;
  return r;
}

ForwardResult Model::forward_vae(const Tensor& input, nn::RunContext& ctx, std::uint64_t seed) {
  if (!spec_.variational)
    throw ConfigError("forward_vae called on a non-variational " + std::string(family_name(spec_.family)));
  nn::Rng noise(seed);
  return forward_full(input, ctx, &noise);
}

Tensor Model::forward(const Tensor& input, nn::RunContext& ctx) {
  nn::Rng* noise = spec_.variational && ctx.training() ? ctx.rng : nullptr;
  if (spec_.variational && ctx.training() && noise == nullptr)
    throw StateError("variational training forward needs a generator");
  return forward_full(input, ctx, noise).reconstruction;
}

Tensor Model::backward_full(const Tensor& grad_reconstruction, const nn::KlGradient* kl, double beta) {
  nn::require_forward(cached_, "autoencoder");
  Tensor gz = decoder_->backward(grad_reconstruction);
  if (!spec_.variational)
    return encoder_->backward(gz);

  Tensor gmu = gz;
  Tensor glv(gz.shape());
  if (sampled_)
    for (std::size_t i = 0; i < gz.size(); ++i)
      glv[i] = gz[i] * eps_[i] * 0.5 * std::exp(0.5 * logvar_[i]);
  if (kl != nullptr && beta != 0.0)
    for (std::size_t i = 0; i < gz.size(); ++i) {
      gmu[i] += beta * kl->mu[i];
      glv[i] += beta * kl->logvar[i];
    }
  Tensor gh = mu_head_->backward(gmu);
  gh += logvar_head_->backward(glv);
  return encoder_->backward(gh);
}

Tensor Model::backward(const Tensor& grad_reconstruction) {
  return backward_full(grad_reconstruction, nullptr, 0.0);
}

LossBreakdown Model::loss_and_backward(const Tensor& input, const Tensor& target, nn::RunContext& ctx,
                                       nn::Rng* noise) {
  ForwardResult r = forward_full(input, ctx, noise);
  LossBreakdown loss;
  loss.reconstruction = nn::mse_loss(r.reconstruction, target);
  loss.total = loss.reconstruction.value;
  Tensor grad = nn::mse_gradient(r.reconstruction, target);
  if (spec_.variational) {
    loss.kl = nn::kl_divergence(r.mu, r.logvar).value;
    loss.total += spec_.kl_beta * loss.kl;
    const nn::KlGradient klg = nn::kl_gradient(r.mu, r.logvar);
    backward_full(grad, &klg, spec_.kl_beta);
  } else {
    backward_full(grad, nullptr, 0.0);
  }
  return loss;
}

Tensor Model::encode(const Tensor& input, nn::RunContext& ctx) {
  require_rank(input, 2, "model input");
  Tensor h = encoder_->forward(input, ctx);
  return spec_.variational ? mu_head_->forward(h, ctx) : h;
}

Tensor Model::decode(const Tensor& latent, nn::RunContext& ctx) {
  require_rank(latent, 2, "latent");
  if (latent.dim(1) != spec_.latent_dim)
    throw DimensionError("latent width " + std::to_string(latent.dim(1)) + " != " +
                         std::to_string(spec_.latent_dim));
  return decoder_->forward(latent, ctx);
}

void Model::save(const std::filesystem::path& path, const nlohmann::json& extra_metadata) {
  nlohmann::json meta = extra_metadata.is_object() ? extra_metadata : nlohmann::json::object();
  meta["model_spec"] = to_json(spec_);
  meta["param_count"] = param_count();
  nn::write_checkpoint(path, meta, parameters(), buffers());
}

} // namespace kanae::models
