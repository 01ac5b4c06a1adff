#include "kanae/nn/conv.hpp"

#include "kanae/error.hpp"
#include "kanae/simd/blas.hpp"

#include <cmath>

namespace kanae::nn {

std::size_t conv_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (kernel == 0 || stride == 0)
    throw ConfigError("convolution kernel width and stride must be >= 1");
  const long span = static_cast<long>(length + 2 * padding) - static_cast<long>(kernel);
  if (span < 0)
    throw ConfigError("convolution output length < 1 (length " + std::to_string(length) + ", kernel " +
                      std::to_string(kernel) + ", padding " + std::to_string(padding) + ")");
  return static_cast<std::size_t>(span) / stride + 1;
}

std::size_t conv_transpose_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                         std::size_t padding, std::size_t output_padding) {
  if (kernel == 0 || stride == 0)
    throw ConfigError("convolution kernel width and stride must be >= 1");
  const long out = static_cast<long>((length - 1) * stride + kernel + output_padding) -
                   static_cast<long>(2 * padding);
  if (out < 1)
    throw ConfigError("transposed convolution output length < 1");
  return static_cast<std::size_t>(out);
}

namespace {

void check_geometry(const ConvGeometry& g) {
  if (g.in_channels == 0 || g.out_channels == 0 || g.kernel == 0 || g.stride == 0)
    throw ConfigError("convolution channels, kernel width and stride must be >= 1");
}

void uniform_init(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values())
    v = dist(rng);
}

void require_input(const Tensor& input, std::size_t channels, const char* who) {
  require_rank(input, 3, who);
  if (input.dim(1) != channels)
    throw DimensionError(std::string(who) + ": expected " + std::to_string(channels) + " channels, got " +
                         std::to_string(input.dim(1)));
}

} // namespace

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(const ConvGeometry& geometry)
    : geom_(geometry),
      weight_(Tensor({geometry.out_channels, geometry.in_channels, geometry.kernel})),
      bias_(Tensor({geometry.out_channels})) {
  check_geometry(geom_);
}

Conv1d::Conv1d(const ConvGeometry& geometry, Rng& rng) : Conv1d(geometry) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(geom_.in_channels * geom_.kernel));
  uniform_init(weight_.value, bound, rng);
  uniform_init(bias_.value, bound, rng);
}

Tensor Conv1d::forward(const Tensor& input, RunContext& /*ctx*/) {
  require_input(input, geom_.in_channels, "conv1d");
  const std::size_t batch = input.dim(0);
  const std::size_t length = input.dim(2);
  const std::size_t out_len = conv_output_length(length, geom_.kernel, geom_.stride, geom_.padding);
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;
  const std::size_t width = cin * geom_.kernel;

  Tensor cols({batch * out_len, width});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t) {
      double* row = cols.data() + (b * out_len + t) * width;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t k = 0; k < geom_.kernel; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos >= 0 && pos < static_cast<long>(length))
            row[c * geom_.kernel + k] = input.at(b, c, static_cast<std::size_t>(pos));
        }
    }

  Tensor rows({batch * out_len, cout});
  simd::matmul_nt(cols.data(), batch * out_len, weight_.value.data(), cout, width, rows.data());

  Tensor out({batch, cout, out_len});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_len; ++t)
        out.at(b, c, t) = rows[(b * out_len + t) * cout + c] + bias_.value[c];

  cols_ = std::move(cols);
  batch_ = batch;
  in_length_ = length;
  out_length_ = out_len;
  cached_ = true;
  return out;
}

Tensor Conv1d::backward(const Tensor& grad_output) {
  require_forward(cached_, "conv1d");
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;
  const std::size_t width = cin * geom_.kernel;
  if (grad_output.shape() != Shape{batch_, cout, out_length_})
    throw DimensionError("conv1d backward: gradient shape " + shape_string(grad_output.shape()));

  Tensor grows({batch_ * out_length_, cout});
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_length_; ++t) {
        const double g = grad_output.at(b, c, t);
        grows[(b * out_length_ + t) * cout + c] = g;
        bias_.grad[c] += g;
      }

  simd::matmul_acc_tn(grows.data(), batch_ * out_length_, cout, cols_.data(), width, weight_.grad.data());

  Tensor gcols({batch_ * out_length_, width});
  simd::matmul_acc_nn(grows.data(), batch_ * out_length_, cout, weight_.value.data(), width, gcols.data());

  Tensor grad_input({batch_, cin, in_length_});
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t t = 0; t < out_length_; ++t) {
      const double* row = gcols.data() + (b * out_length_ + t) * width;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t k = 0; k < geom_.kernel; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos >= 0 && pos < static_cast<long>(in_length_))
            grad_input.at(b, c, static_cast<std::size_t>(pos)) += row[c * geom_.kernel + k];
        }
    }
  return grad_input;
}

void Conv1d::collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({join_name(prefix, "weight"), &weight_});
  out.push_back({join_name(prefix, "bias"), &bias_});
}

// ---------------------------------------------------------------------------
// ConvTranspose1d

ConvTranspose1d::ConvTranspose1d(const ConvGeometry& geometry)
    : geom_(geometry),
      weight_(Tensor({geometry.in_channels, geometry.out_channels, geometry.kernel})),
      bias_(Tensor({geometry.out_channels})) {
  check_geometry(geom_);
  if (geom_.output_padding >= geom_.stride && geom_.output_padding > 0)
    throw ConfigError("transposed convolution output_padding must be < stride");
}

ConvTranspose1d::ConvTranspose1d(const ConvGeometry& geometry, Rng& rng) : ConvTranspose1d(geometry) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(geom_.out_channels * geom_.kernel));
  uniform_init(weight_.value, bound, rng);
  uniform_init(bias_.value, bound, rng);
}

Tensor ConvTranspose1d::forward(const Tensor& input, RunContext& /*ctx*/) {
  require_input(input, geom_.in_channels, "conv_transpose1d");
  const std::size_t batch = input.dim(0);
  const std::size_t length = input.dim(2);
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;
  const std::size_t kw = geom_.kernel;
  const std::size_t width = cout * kw;
  const std::size_t out_len =
      conv_transpose_output_length(length, kw, geom_.stride, geom_.padding, geom_.output_padding);

  Tensor rows({batch * length, cin});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t t = 0; t < length; ++t)
        rows[(b * length + t) * cin + c] = input.at(b, c, t);

  Tensor cols({batch * length, width});
  simd::matmul_acc_nn(rows.data(), batch * length, cin, weight_.value.data(), width, cols.data());

  Tensor out({batch, cout, out_len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_len; ++t)
        out.at(b, c, t) = bias_.value[c];
    for (std::size_t t = 0; t < length; ++t) {
      const double* row = cols.data() + (b * length + t) * width;
      for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t k = 0; k < kw; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos >= 0 && pos < static_cast<long>(out_len))
            out.at(b, c, static_cast<std::size_t>(pos)) += row[c * kw + k];
        }
    }
  }

  rows_ = std::move(rows);
  batch_ = batch;
  in_length_ = length;
  out_length_ = out_len;
  cached_ = true;
  return out;
}

Tensor ConvTranspose1d::backward(const Tensor& grad_output) {
  require_forward(cached_, "conv_transpose1d");
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;
  const std::size_t kw = geom_.kernel;
  const std::size_t width = cout * kw;
  if (grad_output.shape() != Shape{batch_, cout, out_length_})
    throw DimensionError("conv_transpose1d backward: gradient shape " + shape_string(grad_output.shape()));

  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_length_; ++t)
        bias_.grad[c] += grad_output.at(b, c, t);

  Tensor gcols({batch_ * in_length_, width});
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t t = 0; t < in_length_; ++t) {
      double* row = gcols.data() + (b * in_length_ + t) * width;
      for (std::size_t c = 0; c < cout; ++c)
        for (std::size_t k = 0; k < kw; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos >= 0 && pos < static_cast<long>(out_length_))
            row[c * kw + k] = grad_output.at(b, c, static_cast<std::size_t>(pos));
        }
    }

  simd::matmul_acc_tn(rows_.data(), batch_ * in_length_, cin, gcols.data(), width, weight_.grad.data());

  Tensor grows({batch_ * in_length_, cin});
  simd::matmul_nt(gcols.data(), batch_ * in_length_, weight_.value.data(), cin, width, grows.data());

  Tensor grad_input({batch_, cin, in_length_});
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t t = 0; t < in_length_; ++t)
        grad_input.at(b, c, t) = grows[(b * in_length_ + t) * cin + c];
  return grad_input;
}

void ConvTranspose1d::collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({join_name(prefix, "weight"), &weight_});
  out.push_back({join_name(prefix, "bias"), &bias_});
}

} // namespace kanae::nn
