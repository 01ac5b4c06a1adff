#include "kanae/error.hpp"
#include "kanae/kan/kan_layers.hpp"
#include "kanae/simd/blas.hpp"

#include <algorithm>

namespace kanae::kan {

namespace {

const nn::ConvGeometry& checked(const nn::ConvGeometry& g) {
  if (g.in_channels == 0 || g.out_channels == 0 || g.kernel == 0 || g.stride == 0)
    throw ConfigError("kan_conv1d: channels, kernel width and stride must be >= 1");
  return g;
}

} // namespace

KanConv1d::KanConv1d(const nn::ConvGeometry& geometry, SplineGrid grid)
    : geom_(checked(geometry)),
      bank_(std::move(grid), Shape{geometry.out_channels, geometry.in_channels, geometry.kernel}) {}

KanConv1d::KanConv1d(const nn::ConvGeometry& geometry, SplineGrid grid, nn::Rng& rng)
    : KanConv1d(geometry, std::move(grid)) {
  bank_.initialize(geom_.in_channels * geom_.kernel, rng);
}

std::size_t KanConv1d::kan_param_count() const noexcept {
  return geom_.out_channels * geom_.in_channels * geom_.kernel * (bank_.num_basis() + 2);
}

Tensor KanConv1d::forward(const Tensor& input, nn::RunContext& /*ctx*/) {
  require_rank(input, 3, "kan_conv1d");
  if (input.dim(1) != geom_.in_channels)
    throw DimensionError("kan_conv1d: expected " + std::to_string(geom_.in_channels) + " channels, got " +
                         std::to_string(input.dim(1)));
  const std::size_t batch = input.dim(0);
  const std::size_t length = input.dim(2);
  const std::size_t out_len = nn::conv_output_length(length, geom_.kernel, geom_.stride, geom_.padding);
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;

  features_.expand(bank_.grid, input.values());
  bank_.fold(effective_);
  const std::size_t width = features_.width();
  const std::size_t inner = cin * geom_.kernel * width;
  const double* feats = features_.features().data();

  Tensor cols({batch * out_len, inner});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t) {
      double* row = cols.data() + (b * out_len + t) * inner;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t k = 0; k < geom_.kernel; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos < 0 || pos >= static_cast<long>(length))
            continue;
          const double* src = feats + ((b * cin + c) * length + static_cast<std::size_t>(pos)) * width;
          std::copy_n(src, width, row + (c * geom_.kernel + k) * width);
        }
    }

  Tensor rows({batch * out_len, cout});
  simd::matmul_nt(cols.data(), batch * out_len, effective_.data(), cout, inner, rows.data());

  Tensor out({batch, cout, out_len});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_len; ++t)
        out.at(b, c, t) = rows[(b * out_len + t) * cout + c];

  cols_ = std::move(cols);
  batch_ = batch;
  in_length_ = length;
  out_length_ = out_len;
  cached_ = true;
  return out;
}

Tensor KanConv1d::backward(const Tensor& grad_output) {
  nn::require_forward(cached_, "kan_conv1d");
  const std::size_t cin = geom_.in_channels;
  const std::size_t cout = geom_.out_channels;
  if (grad_output.shape() != Shape{batch_, cout, out_length_})
    throw DimensionError("kan_conv1d backward: gradient shape " + shape_string(grad_output.shape()));
  const std::size_t width = features_.width();
  const std::size_t inner = cin * geom_.kernel * width;
  const std::size_t rows = batch_ * out_length_;

  Tensor grows({rows, cout});
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t c = 0; c < cout; ++c)
      for (std::size_t t = 0; t < out_length_; ++t)
        grows[(b * out_length_ + t) * cout + c] = grad_output.at(b, c, t);

  std::vector<double> grad_eff(cout * inner, 0.0);
  simd::matmul_acc_tn(grows.data(), rows, cout, cols_.data(), inner, grad_eff.data());
  bank_.unfold(grad_eff);

  std::vector<double> grad_cols(rows * inner, 0.0);
  simd::matmul_acc_nn(grows.data(), rows, cout, effective_.data(), inner, grad_cols.data());

  std::vector<double> grad_features(batch_ * cin * in_length_ * width, 0.0);
  for (std::size_t b = 0; b < batch_; ++b)
    for (std::size_t t = 0; t < out_length_; ++t) {
      const double* row = grad_cols.data() + (b * out_length_ + t) * inner;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t k = 0; k < geom_.kernel; ++k) {
          const long pos = static_cast<long>(t * geom_.stride + k) - static_cast<long>(geom_.padding);
          if (pos < 0 || pos >= static_cast<long>(in_length_))
            continue;
          double* dst =
              grad_features.data() + ((b * cin + c) * in_length_ + static_cast<std::size_t>(pos)) * width;
          const double* src = row + (c * geom_.kernel + k) * width;
          for (std::size_t m = 0; m < width; ++m)
            dst[m] += src[m];
        }
    }

  Tensor grad_input({batch_, cin, in_length_});
  for (std::size_t i = 0; i < grad_input.size(); ++i)
    grad_input[i] = features_.input_gradient(i, {grad_features.data() + i * width, width});
  return grad_input;
}

void KanConv1d::collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) {
  bank_.collect(out, prefix);
}

} // namespace kanae::kan
