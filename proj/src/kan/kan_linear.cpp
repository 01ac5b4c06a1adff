#include "kanae/error.hpp"
#include "kanae/kan/kan_layers.hpp"
#include "kanae/simd/blas.hpp"

#include <cmath>

namespace kanae::kan {

// ---------------------------------------------------------------------------
// KanEdgeBank

namespace {

Shape with_basis(Shape edge_shape, std::size_t nb) {
  edge_shape.push_back(nb);
  return edge_shape;
}

} // namespace

KanEdgeBank::KanEdgeBank(SplineGrid g, const Shape& edge_shape)
    : grid(std::move(g)), spline_coeffs(Tensor(with_basis(edge_shape, grid.num_basis()))),
      base_weights(Tensor(edge_shape)), scales(Tensor(edge_shape, 1.0)) {}

void KanEdgeBank::initialize(std::size_t fan_in, nn::Rng& rng) {
  std::normal_distribution<double> coeff(0.0, 0.1 / std::sqrt(static_cast<double>(num_basis())));
  for (double& c : spline_coeffs.value.values())
    c = coeff(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> base(-bound, bound);
  for (double& w : base_weights.value.values())
    w = base(rng);
  scales.value.fill(1.0);
}

void KanEdgeBank::fold(std::vector<double>& effective) const {
  effective.resize(edges() * (num_basis() + 1));
  fold_edge_weights(spline_coeffs.value.values(), base_weights.value.values(), scales.value.values(),
                    num_basis(), effective);
}

void KanEdgeBank::unfold(const std::vector<double>& grad_effective) {
  unfold_edge_gradients(grad_effective, spline_coeffs.value.values(), base_weights.value.values(),
                        scales.value.values(), num_basis(), spline_coeffs.grad.values(),
                        base_weights.grad.values(), scales.grad.values());
}

void KanEdgeBank::collect(std::vector<nn::ParamRef>& out, const std::string& prefix) {
  const std::string base = nn::join_name("kan", prefix);
  out.push_back({base + ".spline_coeffs", &spline_coeffs});
  out.push_back({base + ".base_weights", &base_weights});
  out.push_back({base + ".scales", &scales});
}

double KanEdgeBank::smoothness(double lambda) {
  return smoothness_penalty(spline_coeffs.value.values(), num_basis(), lambda, spline_coeffs.grad.values());
}

// ---------------------------------------------------------------------------
// KanLinear

KanLinear::KanLinear(std::size_t in, std::size_t out, SplineGrid grid, nn::ActivationKind node)
    : in_(in), out_(out), node_(node), bank_(std::move(grid), Shape{out == 0 ? 1 : out, in == 0 ? 1 : in}) {
  if (in == 0 || out == 0)
    throw ConfigError("kan_linear: input and output widths must be >= 1");
}

KanLinear::KanLinear(std::size_t in, std::size_t out, SplineGrid grid, nn::ActivationKind node, nn::Rng& rng)
    : KanLinear(in, out, std::move(grid), node) {
  bank_.initialize(in, rng);
}

std::size_t KanLinear::kan_param_count() const noexcept { return out_ * in_ * (bank_.num_basis() + 2); }

Tensor KanLinear::forward(const Tensor& input, nn::RunContext& /*ctx*/) {
  require_rank(input, 2, "kan_linear");
  if (input.dim(1) != in_)
    throw DimensionError("kan_linear: expected input width " + std::to_string(in_) + ", got " +
                         std::to_string(input.dim(1)));
  const std::size_t batch = input.dim(0);
  features_.expand(bank_.grid, input.values());
  bank_.fold(effective_);
  const std::size_t inner = in_ * features_.width();

  Tensor z({batch, out_});
  simd::matmul_nt(features_.features().data(), batch, effective_.data(), out_, inner, z.data());

  Tensor y(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i)
    y[i] = nn::activate(node_, z[i]);
  pre_activation_ = std::move(z);
  batch_ = batch;
  cached_ = true;
  return y;
}

Tensor KanLinear::backward(const Tensor& grad_output) {
  nn::require_forward(cached_, "kan_linear");
  if (grad_output.shape() != Shape{batch_, out_})
    throw DimensionError("kan_linear backward: gradient shape " + shape_string(grad_output.shape()));
  const std::size_t width = features_.width();
  const std::size_t inner = in_ * width;

  Tensor dz(grad_output.shape());
  for (std::size_t i = 0; i < dz.size(); ++i)
    dz[i] = grad_output[i] * nn::activate_derivative(node_, pre_activation_[i]);

  std::vector<double> grad_eff(out_ * inner, 0.0);
  simd::matmul_acc_tn(dz.data(), batch_, out_, features_.features().data(), inner, grad_eff.data());
  bank_.unfold(grad_eff);

  std::vector<double> grad_features(batch_ * inner, 0.0);
  simd::matmul_acc_nn(dz.data(), batch_, out_, effective_.data(), inner, grad_features.data());

  Tensor grad_input({batch_, in_});
  for (std::size_t i = 0; i < batch_ * in_; ++i)
    grad_input[i] = features_.input_gradient(i, {grad_features.data() + i * width, width});
  return grad_input;
}

void KanLinear::collect_parameters(std::vector<nn::ParamRef>& out, const std::string& prefix) {
  bank_.collect(out, prefix);
}

} // namespace kanae::kan
