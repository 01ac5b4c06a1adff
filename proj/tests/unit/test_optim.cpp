#include "kanae/data/dataset.hpp"
#include "kanae/error.hpp"
#include "kanae/kan/kan_layers.hpp"
#include "kanae/nn/loss.hpp"
#include "kanae/optim/train.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kanae;
using namespace kanae::optim;
using kanae::models::Family;
using kanae::models::Model;
using kanae::models::ModelSpec;

namespace {

nn::Parameter scalar_param(double v) { return nn::Parameter(Tensor({1}, v)); }

Tensor random_rows(std::size_t rows, std::size_t n, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> d(0, 1);
  Tensor t({rows, n});
  for (double& v : t.values())
    v = d(rng);
  return t;
}

ModelSpec small(Family f) {
  ModelSpec s = ModelSpec::defaults(f);
  s.input_length = 24;
  s.latent_dim = 4;
  if (models::is_convolutional(f)) {
    s.channels = {4, 8};
    s.hidden = {16};
  } else {
    s.hidden = {32, 16};
  }
  return s;
}

} // namespace

TEST_CASE("adam hand-evaluated steps") {
  OptimizerConfig cfg;
  cfg.lr = 0.1;
  Adam adam(cfg);
  nn::Parameter p = scalar_param(0.5);
  std::vector<nn::ParamRef> refs{{"theta", &p}};

  p.grad[0] = 0.0;
  adam.step(refs);
  CHECK(p.value[0] == 0.5);

  Adam first(cfg);
  nn::Parameter q = scalar_param(0.0);
  q.grad[0] = 1.0;
  std::vector<nn::ParamRef> qrefs{{"q", &q}};
  first.step(qrefs);
  // m_hat = 1, v_hat = 1: update = lr / (1 + eps).
  CHECK(q.value[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));

  Adam toy(cfg);
  nn::Parameter t = scalar_param(1.0);
  std::vector<nn::ParamRef> trefs{{"t", &t}};
  for (int i = 0; i < 100; ++i) {
    t.grad[0] = 2.0 * t.value[0];
    toy.step(trefs);
  }
  CHECK(std::abs(t.value[0]) < 0.05);
  CHECK(toy.steps() == 100);
  CHECK(std::isfinite(toy.first_moments()[0][0]));
}

TEST_CASE("optimizers reject bad gradients and configs") {
  OptimizerConfig cfg;
  auto adam = make_optimizer(cfg);
  nn::Parameter p = scalar_param(1.0);
  p.grad[0] = std::nan("");
  try {
    adam->step({{"encoder.0.weight", &p}});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("encoder.0.weight") != std::string::npos);
  }
  cfg.lr = 0.0;
  CHECK_THROWS_AS(make_optimizer(cfg), ConfigError);
  cfg.lr = 0.1;
  cfg.kind = OptimizerKind::sgd;
  cfg.momentum = 0.5;
  auto sgd = make_optimizer(cfg);
  nn::Parameter s = scalar_param(1.0);
  s.grad[0] = 2.0;
  sgd->step({{"s", &s}});
  CHECK(s.value[0] == doctest::Approx(0.8));
  sgd->step({{"s", &s}});
  CHECK(s.value[0] == doctest::Approx(0.8 - 0.1 * 3.0)); // velocity 0.5*2 + 2
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_FALSE(parse_optimizer("lbfgs").has_value());
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 1;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epochs") != std::string::npos);
    CHECK(msg.find("batch_size") != std::string::npos);
  }
  auto m = Model::build(small(Family::ae), 1);
  TrainConfig ok;
  ok.epochs = 1;
  CHECK_THROWS_AS(train(*m, random_rows(1, 24, 1), ok), ConfigError);
}

TEST_CASE("training is bitwise deterministic and seed-sensitive") {
  const Tensor data = random_rows(21, 24, 3); // 16 + 5: the short batch is kept
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 5;
  for (Family f : models::kAllFamilies) {
    for (bool variational : {false, true}) {
      ModelSpec s = small(f);
      s.variational = variational;
      auto a = Model::build(s, 5);
      auto b = Model::build(s, 5);
      auto c = Model::build(s, 5);
      const LossTrace ta = train(*a, data, cfg);
      const LossTrace tb = train(*b, data, cfg);
      TrainConfig other = cfg;
      other.seed = 6;
      const LossTrace tc = train(*c, data, other);
      CHECK(ta.epoch_loss == tb.epoch_loss);
      CHECK(ta.epoch_loss != tc.epoch_loss);
      CHECK(ta.epoch_loss.size() == 4);
    }
  }
}

TEST_CASE("a single leftover sample is dropped, not trained on") {
  // 17 samples with batch 16: a lone sample would break batch normalization.
  auto m = Model::build(small(Family::cae), 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  CHECK_NOTHROW(train(*m, random_rows(17, 24, 4), cfg));
}

TEST_CASE("non-finite loss aborts with epoch and batch") {
  auto m = Model::build(small(Family::ae), 2);
  Tensor data = random_rows(8, 24, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  InputTransform poison = [](std::span<double> s, std::size_t, std::size_t epoch) {
    if (epoch == 1)
      s[0] = std::numeric_limits<double>::infinity();
  };
  try {
    train(*m, data, cfg, poison);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("overfitting a fixed batch gives a smoothed trace that keeps falling") {
  // Eight z-normalized beats, dropout off, heavy-ball SGD. Adam at a fixed
  // rate overshoots once the loss is tiny, which breaks strict monotonicity.
  const auto beats = data::synthetic_heartbeats(8, 0, 187, 1);
  const Tensor batch = data::to_tensor(data::make_split(beats, beats).train);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.seed = 1;
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.optimizer.lr = 1e-2;
  cfg.optimizer.momentum = 0.9;
  for (Family f : {Family::kcae, Family::cae}) {
    CAPTURE(models::family_name(f));
    ModelSpec s = ModelSpec::defaults(f);
    s.dropout = false;
    auto m = Model::build(s, 1);
    const LossTrace trace = train(*m, batch, cfg);
    std::vector<double> smooth;
    for (std::size_t e = 9; e < trace.epoch_loss.size(); ++e) {
      double acc = 0;
      for (std::size_t j = e - 9; j <= e; ++j)
        acc += trace.epoch_loss[j];
      smooth.push_back(acc / 10);
    }
    // smooth[i] covers epochs i..i+9
    std::size_t rises = 0;
    for (std::size_t i = 50; i + 1 < smooth.size(); ++i)
      rises += smooth[i + 1] > smooth[i];
    CHECK(rises == 0);
    CHECK(trace.epoch_loss.back() < 1e-2);
  }
}

TEST_CASE("epoch callback can stop training early") {
  auto m = Model::build(small(Family::ae), 1);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  std::vector<double> seen;
  const LossTrace trace = train(*m, random_rows(8, 24, 2), cfg, {}, [&](std::size_t epoch, double loss) {
    seen.push_back(loss);
    return epoch < 4;
  });
  CHECK(trace.epoch_loss.size() == 5);
  CHECK(seen == trace.epoch_loss);
}

TEST_CASE("two stacked KAN layers of width 2n+1 learn a sum of inputs") {
  const std::size_t n = 2, points = 200;
  nn::Rng rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor x({points, n}), y({points, 1});
  for (std::size_t p = 0; p < points; ++p) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      x.at(p, j) = u(rng);
      s += x.at(p, j);
    }
    y[p] = s;
  }
  nn::Rng init(7);
  nn::Sequential net("kan");
  net.emplace<kan::KanLinear>(n, 2 * n + 1, SplineGrid(4, 5, -2, 2), nn::ActivationKind::identity, init);
  net.emplace<kan::KanLinear>(2 * n + 1, 1, SplineGrid(4, 5, -4, 4), nn::ActivationKind::identity, init);
  OptimizerConfig oc;
  oc.lr = 1e-2;
  Adam adam(oc);
  const auto params = net.parameters("kan");
  nn::RunContext ctx{nn::Mode::train, nullptr};
  double mse = 1.0;
  for (int step = 0; step < 4000 && mse >= 1e-6; ++step) {
    if (step == 2000)
      adam = Adam(OptimizerConfig{OptimizerKind::adam, 2e-3, 0.9, 0.999, 1e-8, 0.0});
    net.zero_grad();
    Tensor out = net.forward(x, ctx);
    mse = nn::mse_loss(out, y).value;
    net.backward(nn::mse_gradient(out, y));
    adam.step(params);
  }
  MESSAGE("sum-of-inputs MSE " << mse);
  CHECK(mse < 1e-6);
}

TEST_CASE("smoothness weight flattens spline coefficients") {
  auto roughness = [](Model& m) {
    double r = 0;
    const std::size_t nb = m.spec().grid.num_basis();
    for (const auto& p : m.parameters())
      if (p.name.ends_with(".spline_coeffs")) {
        const auto& c = p.param->value.values();
        for (std::size_t e = 0; e < c.size(); e += nb)
          for (std::size_t i = e; i + 1 < e + nb; ++i)
            r += (c[i + 1] - c[i]) * (c[i + 1] - c[i]);
      }
    return r;
  };
  const Tensor data = random_rows(16, 24, 5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  for (Family f : {Family::kae, Family::kcae}) {
    auto plain = Model::build(small(f), 1);
    auto smooth = Model::build(small(f), 1);
    const double before = roughness(*plain);
    train(*plain, data, cfg);
    cfg.smoothness = 1.0;
    const LossTrace trace = train(*smooth, data, cfg);
    cfg.smoothness = 0.0;
    CAPTURE(models::family_name(f));
    CHECK(roughness(*smooth) < roughness(*plain));
    CHECK(roughness(*smooth) < before);
    CHECK(std::isfinite(trace.epoch_loss.back()));
  }
  cfg.smoothness = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
