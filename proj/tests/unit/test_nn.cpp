#include "kanae/error.hpp"
#include "kanae/nn/activation.hpp"
#include "kanae/nn/blocks.hpp"
#include "kanae/nn/conv.hpp"
#include "kanae/nn/gradcheck.hpp"
#include "kanae/nn/linear.hpp"
#include "kanae/nn/loss.hpp"
#include "kanae/nn/norm.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kanae;
using namespace kanae::nn;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, sd);
  for (double& v : t.values())
    v = n(rng);
  return t;
}

void randomize(Parameter& p, Rng& rng) {
  std::normal_distribution<double> n(0.0, 0.5);
  for (double& v : p.value.values())
    v = n(rng);
}

RunContext eval_ctx() { return RunContext{Mode::eval, nullptr}; }

} // namespace

TEST_CASE("tensor basics") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6);
  CHECK(t.row(1)[0] == 4);
  CHECK(t.reshaped({3, 2}).at(2, 1) == 6);
  CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);
  t[0] = std::nan("");
  CHECK_THROWS_AS(require_finite(t, "probe"), NumericError);
}

TEST_CASE("linear forward examples") {
  RunContext ctx = eval_ctx();
  Linear lin(2, 2);
  lin.weight().value.at(0, 0) = 1;
  lin.weight().value.at(1, 1) = 1;
  Activation act(ActivationKind::silu);
  Tensor x({1, 2}, std::vector<double>{0, 1});
  Tensor y = act.forward(lin.forward(x, ctx), ctx);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(0.7310585786).epsilon(1e-10));

  Rng rng(1);
  Linear zero(3, 2);
  Tensor z = act.forward(zero.forward(random_tensor({4, 3}, rng), ctx), ctx);
  for (double v : z.values())
    CHECK(v == 0.0);

  CHECK_THROWS_AS(zero.forward(Tensor({4, 2}), ctx), DimensionError);
}

TEST_CASE("linear forward and backward match loop oracles") {
  Rng rng(7);
  Linear lin(5, 3, rng);
  RunContext ctx = eval_ctx();
  Tensor x = random_tensor({4, 5}, rng);
  Tensor y = lin.forward(x, ctx);
  const Tensor& w = lin.weight().value;
  const Tensor& b = lin.bias().value;
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t o = 0; o < 3; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < 5; ++i)
        s += x.at(n, i) * w.at(o, i);
      CHECK(std::abs(y.at(n, o) - s) < 1e-12);
    }

  lin.zero_grad();
  Tensor ones({4, 3}, 1.0);
  Tensor gx = lin.backward(ones);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0;
      for (std::size_t n = 0; n < 4; ++n)
        s += x.at(n, i);
      CHECK(std::abs(lin.weight().grad.at(o, i) - s) < 1e-12);
    }
  for (std::size_t o = 0; o < 3; ++o)
    CHECK(lin.bias().grad[o] == doctest::Approx(4.0));
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0;
      for (std::size_t o = 0; o < 3; ++o)
        s += w.at(o, i);
      CHECK(std::abs(gx.at(n, i) - s) < 1e-12);
    }
}

TEST_CASE("backward before forward is a state error") {
  Rng rng(1);
  Linear lin(2, 2);
  CHECK_THROWS_AS(lin.backward(Tensor({1, 2})), StateError);
  Conv1d conv({1, 1, 3});
  CHECK_THROWS_AS(conv.backward(Tensor({1, 1, 2})), StateError);
  BatchNorm bn(2);
  CHECK_THROWS_AS(bn.backward(Tensor({2, 2})), StateError);
  Activation act(ActivationKind::tanh);
  CHECK_THROWS_AS(act.backward(Tensor({2, 2})), StateError);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(3);
  RunContext ctx = eval_ctx();
  Conv1d conv({2, 3, 3, 1, 1}, rng);
  Tensor x = random_tensor({2, 2, 6}, rng);
  Tensor y = conv.forward(x, ctx);
  conv.zero_grad();
  Tensor gx = conv.backward(Tensor::zeros_like(y));
  for (double v : gx.values())
    CHECK(v == 0.0);
  for (auto& p : conv.parameters())
    for (double v : p.param->grad.values())
      CHECK(v == 0.0);
}

TEST_CASE("conv1d examples and loop oracle") {
  RunContext ctx = eval_ctx();
  {
    Conv1d id({1, 1, 1});
    id.weight().value[0] = 1.0;
    Tensor x({1, 1, 4}, std::vector<double>{1, -2, 3, 0.5});
    CHECK(id.forward(x, ctx).storage() == x.storage());
  }
  {
    Conv1d avg({1, 1, 2});
    avg.weight().value.fill(0.5);
    Tensor x({1, 1, 3}, std::vector<double>{1, 3, 5});
    Tensor y = avg.forward(x, ctx);
    CHECK(y.shape() == Shape{1, 1, 2});
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 4.0);
  }
  Rng rng(11);
  for (std::size_t stride : {1u, 2u}) {
    Conv1d conv({2, 3, 3, stride, 1}, rng);
    Tensor x = random_tensor({2, 2, 7}, rng);
    Tensor y = conv.forward(x, ctx);
    const std::size_t lout = (7 + 2 - 3) / stride + 1;
    REQUIRE(y.shape() == Shape{2, 3, lout});
    const Tensor& w = conv.weight().value;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t t = 0; t < lout; ++t) {
          double s = conv.bias().value[o];
          for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t k = 0; k < 3; ++k) {
              const long p = static_cast<long>(t * stride + k) - 1;
              if (p >= 0 && p < 7)
                s += w.at(o, c, k) * x.at(n, c, static_cast<std::size_t>(p));
            }
          CHECK(std::abs(y.at(n, o, t) - s) < 1e-12);
        }
  }
  CHECK_THROWS_AS(conv_output_length(2, 5, 1, 0), ConfigError);
  CHECK(conv_output_length(187, 5, 2, 2) == 94);
}

TEST_CASE("conv transpose examples and adjoint identity") {
  RunContext ctx = eval_ctx();
  {
    ConvTranspose1d id({1, 1, 1});
    id.weight().value[0] = 1.0;
    Tensor x({1, 1, 3}, std::vector<double>{4, 5, 6});
    CHECK(id.forward(x, ctx).storage() == x.storage());
  }
  {
    ConvTranspose1d up({1, 1, 2, 2});
    up.weight().value.fill(1.0);
    Tensor x({1, 1, 2}, std::vector<double>{1, 2});
    Tensor y = up.forward(x, ctx);
    CHECK(y.storage() == std::vector<double>{1, 1, 2, 2});
  }
  CHECK_THROWS_AS(ConvTranspose1d({1, 1, 3, 2, 0, 2}), ConfigError);

  Rng rng(21);
  for (std::size_t stride : {1u, 2u, 3u})
    for (std::size_t pad : {0u, 1u, 2u}) {
      CAPTURE(stride);
      CAPTURE(pad);
      const std::size_t cin = 3, cout = 2, kernel = 5, len = 11;
      Conv1d conv({cin, cout, kernel, stride, pad});
      Tensor w = random_tensor({cout, cin, kernel}, rng);
      conv.weight().value = w;
      Tensor x = random_tensor({2, cin, len}, rng);
      Tensor cx = conv.forward(x, ctx);
      Tensor y = random_tensor(cx.shape(), rng);
      // output_padding recovers the original length where the stride drops samples.
      const std::size_t base = conv_transpose_output_length(cx.dim(2), kernel, stride, pad, 0);
      ConvTranspose1d exact({cout, cin, kernel, stride, pad, len - base});
      exact.weight().value = w; // [C_in' = cout, C_out' = cin, k] is the same array
      Tensor ty = exact.forward(y, ctx);
      REQUIRE(ty.shape() == x.shape());
      CHECK(std::abs(dot(cx, y) - dot(x, ty)) < 1e-10);
    }
}

TEST_CASE("batchnorm behaviour") {
  Rng rng(5);
  BatchNorm bn(2);
  bn.gamma().value.fill(3.0);
  bn.beta().value[0] = 0.25;
  bn.beta().value[1] = -1.0;
  RunContext train{Mode::train, &rng};
  Tensor x({3, 2}, std::vector<double>{7, 1, 7, 2, 7, 3});
  Tensor y = bn.forward(x, train);
  for (std::size_t n = 0; n < 3; ++n)
    CHECK(y.at(n, 0) == doctest::Approx(0.25));

  CHECK_THROWS_AS(bn.forward(Tensor({1, 2}), train), ConfigError);
  RunContext ev = eval_ctx();
  CHECK_NOTHROW(bn.forward(Tensor({1, 2}), ev));

  // Running statistics after training on a fixed distribution.
  BatchNorm bn2(3);
  bn2.gamma().value = Tensor({3}, std::vector<double>{1.5, 0.5, 2.0});
  bn2.beta().value = Tensor({3}, std::vector<double>{0.3, -0.7, 1.0});
  std::normal_distribution<double> n0(2.0, 3.0), n1(-1.0, 0.5), n2(10.0, 2.0);
  auto sample = [&](std::size_t batch) {
    Tensor t({batch, 3});
    for (std::size_t i = 0; i < batch; ++i) {
      t.at(i, 0) = n0(rng);
      t.at(i, 1) = n1(rng);
      t.at(i, 2) = n2(rng);
    }
    return t;
  };
  for (int step = 0; step < 300; ++step)
    bn2.forward(sample(256), train);
  Tensor out = bn2.forward(sample(5000), ev);
  for (std::size_t f = 0; f < 3; ++f) {
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < 5000; ++i)
      mean += out.at(i, f);
    mean /= 5000;
    for (std::size_t i = 0; i < 5000; ++i)
      sq += (out.at(i, f) - mean) * (out.at(i, f) - mean);
    const double sd = std::sqrt(sq / 4999);
    CHECK(std::abs(mean - bn2.beta().value[f]) < 0.1);
    CHECK(std::abs(sd - bn2.gamma().value[f]) < 0.1 * bn2.gamma().value[f]);
  }
}

TEST_CASE("dropout behaviour") {
  Rng rng(9);
  RunContext train{Mode::train, &rng};
  RunContext ev = eval_ctx();
  Tensor ones({10000}, 1.0);
  Tensor x = random_tensor({4, 5}, rng);
  Dropout none(0.0);
  CHECK(none.forward(x, train).storage() == x.storage());
  CHECK(none.forward(x, ev).storage() == x.storage());
  for (double p : {0.1, 0.5}) {
    Dropout d(p);
    CHECK(d.forward(x, ev).storage() == x.storage());
    Tensor y = d.forward(ones, train);
    double mean = 0;
    for (double v : y.values()) {
      CHECK((v == 0.0 || std::abs(v - 1.0 / (1.0 - p)) < 1e-15));
      mean += v;
    }
    mean /= static_cast<double>(y.size());
    CHECK(std::abs(mean - 1.0) < 0.02);
  }
  CHECK_THROWS_AS(Dropout(1.0), ConfigError);
  CHECK_THROWS_AS(Dropout(-0.1), ConfigError);
  Dropout d(0.5);
  RunContext no_rng{Mode::train, nullptr};
  CHECK_THROWS_AS(d.forward(x, no_rng), StateError);
}

TEST_CASE("activations") {
  CHECK(silu(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
  CHECK(silu(1.0) == doctest::Approx(0.7310585786300049));
  CHECK(std::isfinite(silu(-800.0)));
  CHECK(std::isfinite(sigmoid(800.0)));
  CHECK(parse_activation("tanh") == ActivationKind::tanh);
  CHECK_FALSE(parse_activation("relu").has_value());
  for (double x : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
    const double h = 1e-6;
    for (auto k : {ActivationKind::silu, ActivationKind::tanh, ActivationKind::identity})
      CHECK(activate_derivative(k, x) ==
            doctest::Approx((activate(k, x + h) - activate(k, x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("mse and kl losses") {
  Tensor a({1, 2}, std::vector<double>{0, 0});
  Tensor b({1, 2}, std::vector<double>{1, 1});
  CHECK(mse_loss(a, a).value == 0.0);
  CHECK(mse_loss(a, b).value == 1.0);
  CHECK_THROWS_AS(mse_loss(a, Tensor({2, 1})), DimensionError);

  Rng rng(33);
  Tensor p = random_tensor({3, 7}, rng);
  Tensor t = random_tensor({3, 7}, rng);
  LossValue lv = mse_loss(p, t);
  double total = 0;
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0;
    for (std::size_t i = 0; i < 7; ++i)
      s += std::pow(p.at(n, i) - t.at(n, i), 2);
    CHECK(std::abs(lv.per_sample[n] - s / 7) < 1e-14);
    total += s / 7;
  }
  CHECK(std::abs(lv.value - total / 3) < 1e-14);

  Tensor mu0({1, 1}, 0.0);
  CHECK(kl_divergence(mu0, mu0).value == 0.0);
  Tensor mu1({1, 1}, 1.0);
  CHECK(kl_divergence(mu1, mu0).value == doctest::Approx(0.5));
  Tensor mu = random_tensor({4, 5}, rng);
  Tensor lvv = random_tensor({4, 5}, rng);
  LossValue kl = kl_divergence(mu, lvv);
  double mean = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i)
      s += 1 + lvv.at(n, i) - mu.at(n, i) * mu.at(n, i) - std::exp(lvv.at(n, i));
    CHECK(std::abs(kl.per_sample[n] - (-0.5 * s)) < 1e-12);
    CHECK(kl.per_sample[n] >= 0.0);
    mean += -0.5 * s / 4;
  }
  CHECK(std::abs(kl.value - mean) < 1e-12);

  // Loss gradients against central differences.
  Tensor g = mse_gradient(p, t);
  KlGradient kg = kl_gradient(mu, lvv);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); i += 5) {
    Tensor pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    CHECK(g[i] == doctest::Approx((mse_loss(pp, t).value - mse_loss(pm, t).value) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < mu.size(); i += 3) {
    Tensor mp = mu, mm = mu, lp = lvv, lm = lvv;
    mp[i] += h;
    mm[i] -= h;
    lp[i] += h;
    lm[i] -= h;
    CHECK(kg.mu[i] ==
          doctest::Approx((kl_divergence(mp, lvv).value - kl_divergence(mm, lvv).value) / (2 * h)).epsilon(1e-6));
    CHECK(kg.logvar[i] ==
          doctest::Approx((kl_divergence(mu, lp).value - kl_divergence(mu, lm).value) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("gradcheck passes for every layer type") {
  Rng rng(101);
  GradcheckOptions opts;
  opts.seed = 4;

  SUBCASE("linear 4->3 at 1e-6") {
    Linear lin(4, 3, rng);
    opts.tolerance = 1e-6;
    auto rep = gradcheck_layer("linear", lin, random_tensor({5, 4}, rng), Mode::eval, opts);
    CHECK(rep.passed);
    CHECK(rep.checked >= 20);
  }
  SUBCASE("conv1d") {
    Conv1d conv({2, 3, 3, 2, 1}, rng);
    auto rep = gradcheck_layer("conv1d", conv, random_tensor({2, 2, 9}, rng), Mode::eval, opts);
    CHECK(rep.passed);
  }
  SUBCASE("conv transpose") {
    ConvTranspose1d convt({3, 2, 5, 2, 2, 1}, rng);
    auto rep = gradcheck_layer("convT", convt, random_tensor({2, 3, 6}, rng), Mode::eval, opts);
    CHECK(rep.passed);
  }
  SUBCASE("batchnorm train and eval, rank 2 and 3") {
    BatchNorm bn(3);
    randomize(bn.gamma(), rng);
    randomize(bn.beta(), rng);
    bn.running_var().fill(1.7);
    CHECK(gradcheck_layer("bn-train", bn, random_tensor({4, 3}, rng), Mode::train, opts).passed);
    CHECK(gradcheck_layer("bn-eval", bn, random_tensor({4, 3}, rng), Mode::eval, opts).passed);
    CHECK(gradcheck_layer("bn3-train", bn, random_tensor({3, 3, 5}, rng), Mode::train, opts).passed);
    CHECK(gradcheck_layer("bn3-eval", bn, random_tensor({3, 3, 5}, rng), Mode::eval, opts).passed);
  }
  SUBCASE("dropout in train mode with a fixed mask") {
    Dropout d(0.3);
    CHECK(gradcheck_layer("dropout", d, random_tensor({4, 6}, rng), Mode::train, opts).passed);
  }
  SUBCASE("activations and blocks") {
    Activation s(ActivationKind::silu), t(ActivationKind::tanh);
    CHECK(gradcheck_layer("silu", s, random_tensor({3, 4}, rng), Mode::eval, opts).passed);
    CHECK(gradcheck_layer("tanh", t, random_tensor({3, 4}, rng), Mode::eval, opts).passed);
    auto block = make_conv_block({1, 4, 5, 2, 2}, {true, true, 0.1}, rng);
    auto rep = gradcheck_layer("conv-block", *block, random_tensor({3, 1, 12}, rng), Mode::train, opts);
    for (const auto& e : rep.worst)
      MESSAGE(e.tensor << "[" << e.index << "] rel " << e.rel_error << " analytic " << e.analytic << " numeric " << e.numeric);
    CHECK(rep.passed);
    auto lblock = make_linear_block(6, 4, {true, false, 0.1}, rng);
    CHECK(gradcheck_layer("linear-block", *lblock, random_tensor({3, 6}, rng), Mode::eval, opts).passed);
  }
}

TEST_CASE("gradcheck detects a wrong gradient") {
  Rng rng(1);
  Linear lin(4, 3, rng);
  GradcheckOptions opts;
  opts.analytic_scale = 1.01;
  auto rep = gradcheck_layer("linear", lin, random_tensor({5, 4}, rng), Mode::eval, opts);
  CHECK_FALSE(rep.passed);
  CHECK(rep.worst_rel_error > opts.tolerance);
  CHECK_FALSE(rep.worst.empty());
}

TEST_CASE("sequential names children and rejects non-finite outputs") {
  Rng rng(2);
  Sequential seq("enc");
  seq.emplace<Linear>(2, 2, rng);
  seq.emplace<BatchNorm>(2);
  auto names = seq.parameters("enc");
  REQUIRE(names.size() == 4);
  CHECK(names[0].name == "enc.0.weight");
  CHECK(names[3].name == "enc.1.beta");
  CHECK(seq.buffers("enc").size() == 2);
  CHECK(seq.param_count() == 2 * 2 + 2 + 2 + 2);

  Sequential bad("bad");
  auto& lin = bad.emplace<Linear>(1, 1);
  lin.weight().value[0] = 1e308;
  RunContext ctx = eval_ctx();
  Tensor x({1, 1}, 1e308);
  try {
    bad.forward(x, ctx);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("bad.0") != std::string::npos);
  }
}
