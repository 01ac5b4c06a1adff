#include "kanae/nn/linear.hpp"

#include "kanae/error.hpp"
#include "kanae/simd/blas.hpp"

#include <cmath>

namespace kanae::nn {

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : in_(in_features), out_(out_features), weight_(Tensor({out_features, in_features})),
      bias_(Tensor({out_features})) {}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
    : Linear(in_features, out_features) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weight_.value.values())
    w = dist(rng);
  for (double& b : bias_.value.values())
    b = dist(rng);
}

Tensor Linear::forward(const Tensor& input, RunContext& /*ctx*/) {
  require_rank(input, 2, "linear");
  if (input.dim(1) != in_)
    throw DimensionError("linear: expected input width " + std::to_string(in_) + ", got " +
                         std::to_string(input.dim(1)));
  const std::size_t batch = input.dim(0);
  Tensor out({batch, out_});
  simd::matmul_nt(input.data(), batch, weight_.value.data(), out_, in_, out.data());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_; ++o)
      out.at(b, o) += bias_.value[o];
  input_ = input;
  cached_ = true;
  return out;
}

Tensor Linear::backward(const Tensor& grad_output) {
  require_forward(cached_, "linear");
  const std::size_t batch = input_.dim(0);
  if (grad_output.shape() != Shape{batch, out_})
    throw DimensionError("linear backward: gradient shape " + shape_string(grad_output.shape()));
  simd::matmul_acc_tn(grad_output.data(), batch, out_, input_.data(), in_, weight_.grad.data());
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_; ++o)
      bias_.grad[o] += grad_output.at(b, o);
  Tensor grad_input({batch, in_});
  simd::matmul_acc_nn(grad_output.data(), batch, out_, weight_.value.data(), in_, grad_input.data());
  return grad_input;
}

void Linear::collect_parameters(std::vector<ParamRef>& out, const std::string& prefix) {
  out.push_back({join_name(prefix, "weight"), &weight_});
  out.push_back({join_name(prefix, "bias"), &bias_});
}

} // namespace kanae::nn
