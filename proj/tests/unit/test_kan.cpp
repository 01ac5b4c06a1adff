#include "kanae/error.hpp"
#include "kanae/kan/kan_layers.hpp"
#include "kanae/nn/gradcheck.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kanae;
using namespace kanae::kan;
using nn::Mode;
using nn::Rng;
using nn::RunContext;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, sd);
  for (double& v : t.values())
    v = n(rng);
  return t;
}

void randomize_bank(KanEdgeBank& bank, Rng& rng) {
  std::normal_distribution<double> n(0.0, 0.7);
  for (auto* p : {&bank.spline_coeffs, &bank.base_weights, &bank.scales})
    for (double& v : p->value.values())
      v = n(rng);
}

double silu_ref(double x) { return x / (1.0 + std::exp(-x)); }

// psi(x) written directly from the edge-function definition.
double psi(const SplineGrid& g, const KanEdgeBank& bank, std::size_t edge, double x) {
  const std::size_t nb = g.num_basis();
  std::span<const double> c(bank.spline_coeffs.value.data() + edge * nb, nb);
  return bank.scales.value[edge] * (bank.base_weights.value[edge] * silu_ref(x) + g.evaluate(c, x));
}

RunContext eval_ctx() { return RunContext{Mode::eval, nullptr}; }

} // namespace

TEST_CASE("kan linear trivial examples") {
  RunContext ctx = eval_ctx();
  SplineGrid g(4, 5, -2, 2);
  KanLinear zero(3, 2, g);
  Tensor x({4, 3}, 0.7);
  const Tensor y0 = zero.forward(x, ctx);
  for (double v : y0.values())
    CHECK(v == 0.0);

  KanLinear one(1, 1, g);
  one.bank().spline_coeffs.value.fill(1.0);
  Tensor xi({1, 1}, 0.37);
  CHECK(one.forward(xi, ctx)[0] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(KanLinear(0, 3, g), ConfigError);
  CHECK_THROWS_AS(KanLinear(3, 0, g), ConfigError);
  CHECK_THROWS_AS(KanConv1d(nn::ConvGeometry{1, 0, 3}, g), ConfigError);
}

TEST_CASE("kan linear matches a per-edge loop oracle") {
  Rng rng(8);
  SplineGrid g(4, 5, -2, 2);
  for (auto node : {nn::ActivationKind::identity, nn::ActivationKind::tanh}) {
    KanLinear layer(3, 2, g, node, rng);
    randomize_bank(layer.bank(), rng);
    Tensor x = random_tensor({4, 3}, rng, 1.5); // some entries fall outside the grid
    RunContext ctx = eval_ctx();
    Tensor y = layer.forward(x, ctx);
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 2; ++i) {
        double z = 0;
        for (std::size_t j = 0; j < 3; ++j)
          z += psi(g, layer.bank(), i * 3 + j, x.at(b, j));
        CHECK(std::abs(y.at(b, i) - nn::activate(node, z)) < 1e-12);
      }
  }
}

TEST_CASE("kan linear backward examples") {
  Rng rng(12);
  SplineGrid g(4, 5, -2, 2);
  RunContext ctx = eval_ctx();
  KanLinear layer(3, 2, g, nn::ActivationKind::identity, rng);
  randomize_bank(layer.bank(), rng);
  Tensor x = random_tensor({3, 3}, rng);
  Tensor y = layer.forward(x, ctx);
  layer.zero_grad();
  Tensor gx = layer.backward(Tensor::zeros_like(y));
  for (double v : gx.values())
    CHECK(v == 0.0);
  for (auto& p : layer.parameters())
    for (double v : p.param->grad.values())
      CHECK(v == 0.0);

  // Single edge: d loss / d coeffs = upstream * scale * basis(x).
  KanLinear single(1, 1, g, nn::ActivationKind::identity, rng);
  randomize_bank(single.bank(), rng);
  Tensor xi({1, 1}, 0.63);
  single.forward(xi, ctx);
  single.zero_grad();
  Tensor up({1, 1}, -1.7);
  single.backward(up);
  const auto basis = g.basis(0.63);
  const double s = single.bank().scales.value[0];
  for (std::size_t m = 0; m < basis.size(); ++m)
    CHECK(single.bank().spline_coeffs.grad[m] == doctest::Approx(-1.7 * s * basis[m]).epsilon(1e-12));
  CHECK(single.bank().base_weights.grad[0] == doctest::Approx(-1.7 * s * silu_ref(0.63)).epsilon(1e-12));

  // Outside the grid only the silu branch carries input gradient.
  Tensor far({1, 1}, 3.5);
  single.forward(far, ctx);
  Tensor gfar = single.backward(Tensor({1, 1}, 1.0));
  const double h = 1e-6;
  const double ds = (silu_ref(3.5 + h) - silu_ref(3.5 - h)) / (2 * h);
  CHECK(gfar[0] == doctest::Approx(s * single.bank().base_weights.value[0] * ds).epsilon(1e-8));
}

TEST_CASE("kan layers pass gradcheck") {
  Rng rng(31);
  SplineGrid g(4, 5, -2, 2);
  nn::GradcheckOptions opts;
  opts.tolerance = 1e-5;
  opts.seed = 9;
  SUBCASE("linear 4->3") {
    KanLinear layer(4, 3, g, nn::ActivationKind::identity, rng);
    randomize_bank(layer.bank(), rng);
    auto rep = nn::gradcheck_layer("kan_linear", layer, random_tensor({5, 4}, rng), Mode::eval, opts);
    CHECK(rep.passed);
    CHECK(rep.checked == 5 * 4 + 3 * 4 * 8 + 3 * 4 + 3 * 4); // every entry
  }
  SUBCASE("linear with tanh node") {
    KanLinear layer(3, 2, g, nn::ActivationKind::tanh, rng);
    randomize_bank(layer.bank(), rng);
    CHECK(nn::gradcheck_layer("kan_linear_tanh", layer, random_tensor({4, 3}, rng), Mode::eval, opts).passed);
  }
  SUBCASE("conv L=8 w=3") {
    KanConv1d layer({2, 3, 3, 1, 1}, g, rng);
    randomize_bank(layer.bank(), rng);
    CHECK(nn::gradcheck_layer("kan_conv", layer, random_tensor({2, 2, 8}, rng), Mode::eval, opts).passed);
  }
  SUBCASE("conv strided") {
    KanConv1d layer({1, 2, 5, 2, 2}, g, rng);
    randomize_bank(layer.bank(), rng);
    CHECK(nn::gradcheck_layer("kan_conv_s2", layer, random_tensor({2, 1, 11}, rng), Mode::eval, opts).passed);
  }
}

TEST_CASE("kan conv matches a sliding-window oracle") {
  Rng rng(40);
  SplineGrid g(4, 5, -2, 2);
  RunContext ctx = eval_ctx();
  KanConv1d zero({2, 3, 3, 1, 1}, g);
  const Tensor y0 = zero.forward(random_tensor({2, 2, 12}, rng), ctx);
  for (double v : y0.values())
    CHECK(v == 0.0);

  for (std::size_t stride : {1u, 2u}) {
    const std::size_t cin = 2, cout = 3, w = 3, len = 12, pad = 1;
    KanConv1d layer({cin, cout, w, stride, pad}, g, rng);
    randomize_bank(layer.bank(), rng);
    Tensor x = random_tensor({2, cin, len}, rng);
    Tensor y = layer.forward(x, ctx);
    const std::size_t lout = (len + 2 * pad - w) / stride + 1;
    REQUIRE(y.shape() == Shape{2, cout, lout});
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t t = 0; t < lout; ++t) {
          double s = 0;
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t k = 0; k < w; ++k) {
              const long p = static_cast<long>(t * stride + k) - static_cast<long>(pad);
              if (p < 0 || p >= static_cast<long>(len))
                continue;
              s += psi(g, layer.bank(), (o * cin + c) * w + k, x.at(b, c, static_cast<std::size_t>(p)));
            }
          CHECK(std::abs(y.at(b, o, t) - s) < 1e-12);
        }
  }
}

TEST_CASE("width-1 kan conv reduces to position-wise kan linear") {
  Rng rng(41);
  SplineGrid g(3, 6, -1.5, 1.5);
  RunContext ctx = eval_ctx();
  KanConv1d conv({1, 1, 1}, g, rng);
  randomize_bank(conv.bank(), rng);
  KanLinear lin(1, 1, g);
  lin.bank().spline_coeffs.value = conv.bank().spline_coeffs.value.reshaped({1, 1, g.num_basis()});
  lin.bank().base_weights.value = conv.bank().base_weights.value.reshaped({1, 1});
  lin.bank().scales.value = conv.bank().scales.value.reshaped({1, 1});

  Tensor x = random_tensor({3, 1, 9}, rng, 1.2);
  Tensor y_conv = conv.forward(x, ctx);
  Tensor y_lin = lin.forward(x.reshaped({27, 1}), ctx);
  CHECK(y_conv.storage() == y_lin.storage());

  Tensor up = random_tensor(y_conv.shape(), rng);
  conv.zero_grad();
  lin.zero_grad();
  Tensor g_conv = conv.backward(up);
  Tensor g_lin = lin.backward(up.reshaped({27, 1}));
  for (std::size_t i = 0; i < g_conv.size(); ++i)
    CHECK(std::abs(g_conv[i] - g_lin[i]) < 1e-12);
  for (std::size_t i = 0; i < g.num_basis(); ++i)
    CHECK(std::abs(conv.bank().spline_coeffs.grad[i] - lin.bank().spline_coeffs.grad[i]) < 1e-12);
}

TEST_CASE("output is linear in coefficients and base weights") {
  Rng rng(50);
  SplineGrid g(4, 5, -2, 2);
  RunContext ctx = eval_ctx();
  KanLinear a(3, 4, g), b(3, 4, g), sum(3, 4, g);
  Tensor x = random_tensor({5, 3}, rng);
  for (auto* layer : {&a, &b}) {
    for (auto* p : {&layer->bank().spline_coeffs, &layer->bank().base_weights})
      for (double& v : p->value.values())
        v = std::normal_distribution<double>(0, 1)(rng);
  }
  const double alpha = 0.8, beta = -1.3;
  auto combine = [&](nn::Parameter KanEdgeBank::*member) {
    Tensor& out = (sum.bank().*member).value;
    const Tensor& pa = (a.bank().*member).value;
    const Tensor& pb = (b.bank().*member).value;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = alpha * pa[i] + beta * pb[i];
  };
  combine(&KanEdgeBank::spline_coeffs);
  combine(&KanEdgeBank::base_weights);
  Tensor ya = a.forward(x, ctx), yb = b.forward(x, ctx), ys = sum.forward(x, ctx);
  for (std::size_t i = 0; i < ys.size(); ++i)
    CHECK(std::abs(ys[i] - (alpha * ya[i] + beta * yb[i])) < 1e-12);
}

TEST_CASE("parameter counts and checkpoint names") {
  SplineGrid g(4, 5, -2, 2);
  KanLinear lin(4, 3, g);
  CHECK(lin.kan_param_count() == 120);
  CHECK(lin.param_count() == 120);
  KanConv1d conv({1, 2, 3}, g);
  CHECK(conv.kan_param_count() == 60);
  CHECK(conv.param_count() == 60);
  auto names = lin.parameters("enc0");
  REQUIRE(names.size() == 3);
  CHECK(names[0].name == "kan.enc0.spline_coeffs");
  CHECK(names[1].name == "kan.enc0.base_weights");
  CHECK(names[2].name == "kan.enc0.scales");
}

TEST_CASE("smoothness penalty gradient") {
  SplineGrid g(4, 5, -2, 2);
  Rng rng(60);
  KanLinear lin(2, 2, g, nn::ActivationKind::identity, rng);
  auto& c = lin.bank().spline_coeffs;
  lin.zero_grad();
  const double lambda = 0.3;
  const double p0 = lin.bank().smoothness(lambda);
  CHECK(p0 > 0.0);
  Tensor analytic = c.grad;
  const double h = 1e-6;
  std::vector<double> scratch(c.value.size());
  for (std::size_t i = 0; i < c.value.size(); ++i) {
    const double keep = c.value[i];
    c.value[i] = keep + h;
    const double up = smoothness_penalty(c.value.values(), g.num_basis(), lambda, scratch);
    c.value[i] = keep - h;
    const double dn = smoothness_penalty(c.value.values(), g.num_basis(), lambda, scratch);
    c.value[i] = keep;
    CHECK(analytic[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
  }
  CHECK(lin.bank().smoothness(0.0) == 0.0);
}
