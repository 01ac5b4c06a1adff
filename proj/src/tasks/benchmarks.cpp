#include "kanae/tasks/benchmarks.hpp"

#include "kanae/kan/kan_layers.hpp"
#include "kanae/models/model.hpp"
#include "kanae/nn/activation.hpp"
#include "kanae/nn/conv.hpp"
#include "kanae/nn/linear.hpp"
#include "kanae/nn/norm.hpp"
#include "kanae/tasks/report.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

namespace kanae::tasks {

namespace {

Tensor gaussian(Shape shape, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.values())
    v = d(rng);
  return t;
}

} // namespace

double median_forward_seconds(nn::Layer& layer, const Tensor& input, std::size_t warmup, std::size_t iterations) {
  nn::RunContext ctx{nn::Mode::eval, nullptr};
  for (std::size_t i = 0; i < warmup; ++i)
    layer.forward(input, ctx);
  std::vector<double> times(std::max<std::size_t>(iterations, 1));
  for (double& t : times) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor out = layer.forward(input, ctx);
    t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
  return times[times.size() / 2];
}

std::vector<TimingPair> timing_benchmark(std::span<const std::size_t> linear_widths,
                                         std::span<const std::size_t> conv_channels, const TimingOptions& o) {
  std::vector<TimingPair> out;
  nn::Rng rng(o.seed);
  const SplineGrid grid(4, 5, -2.0, 2.0);
  for (std::size_t w : linear_widths) {
    nn::Linear plain(w, w, rng);
    kan::KanLinear kanl(w, w, grid, nn::ActivationKind::identity, rng);
    const Tensor x = gaussian({o.batch, w}, o.seed + w);
    TimingPair p{"linear", w};
    p.plain_seconds = median_forward_seconds(plain, x, o.warmup, o.iterations);
    p.kan_seconds = median_forward_seconds(kanl, x, o.warmup, o.iterations);
    p.ratio = p.kan_seconds / p.plain_seconds;
    out.push_back(p);
  }
  for (std::size_t c : conv_channels) {
    const nn::ConvGeometry g{c, c, 5, 1, 2};
    nn::Conv1d plain(g, rng);
    kan::KanConv1d kanc(g, grid, rng);
    const Tensor x = gaussian({o.batch, c, o.conv_length}, o.seed + 1000 + c);
    TimingPair p{"conv1d", c};
    p.plain_seconds = median_forward_seconds(plain, x, o.warmup, o.iterations);
    p.kan_seconds = median_forward_seconds(kanc, x, o.warmup, o.iterations);
    p.ratio = p.kan_seconds / p.plain_seconds;
    out.push_back(p);
  }
  return out;
}

std::string timing_csv(std::span<const TimingPair> pairs) {
  std::ostringstream out;
  out << "layer,width,plain_seconds,kan_seconds,ratio\n";
  for (const auto& p : pairs)
    out << p.name << ',' << p.width << ',' << format_double(p.plain_seconds) << ','
        << format_double(p.kan_seconds) << ',' << format_double(p.ratio) << '\n';
  return out.str();
}

std::vector<SuiteEntry> gradcheck_suite(double analytic_scale, std::uint64_t seed) {
  nn::GradcheckOptions layer_opts;
  layer_opts.step = 1e-5;
  layer_opts.tolerance = 1e-5;
  layer_opts.seed = seed;
  layer_opts.analytic_scale = analytic_scale;
  nn::GradcheckOptions model_opts = layer_opts;
  model_opts.tolerance = 1e-4;

  std::vector<SuiteEntry> out;
  nn::Rng rng(seed + 17);
  const SplineGrid grid(4, 5, -2.0, 2.0);
  auto run = [&](const std::string& name, nn::Layer& layer, const Tensor& x, nn::Mode mode,
                 const nn::GradcheckOptions& opts) {
    out.push_back({name, nn::gradcheck_layer(name, layer, x, mode, opts)});
  };

  {
    nn::Linear layer(6, 5, rng);
    run("linear", layer, gaussian({2, 6}, seed + 1), nn::Mode::eval, layer_opts);
  }
  {
    nn::Conv1d layer({3, 4, 5, 2, 2}, rng);
    run("conv1d", layer, gaussian({2, 3, 11}, seed + 2), nn::Mode::eval, layer_opts);
  }
  {
    nn::ConvTranspose1d layer({4, 3, 5, 2, 2, 1}, rng);
    run("conv_transpose1d", layer, gaussian({2, 4, 6}, seed + 3), nn::Mode::eval, layer_opts);
  }
  {
    // Frozen statistics: populate running estimates, then check in eval mode.
    nn::BatchNorm layer(5);
    nn::Rng drop(seed);
    nn::RunContext warm{nn::Mode::train, &drop};
    for (int i = 0; i < 4; ++i)
      layer.forward(gaussian({8, 5}, seed + 40 + i), warm);
    run("batchnorm", layer, gaussian({2, 5}, seed + 4), nn::Mode::eval, layer_opts);
  }
  {
    kan::KanLinear layer(5, 4, grid, nn::ActivationKind::identity, rng);
    run("kan_linear", layer, gaussian({2, 5}, seed + 5), nn::Mode::eval, layer_opts);
  }
  {
    kan::KanConv1d layer({2, 3, 5, 2, 2}, grid, rng);
    run("kan_conv1d", layer, gaussian({2, 2, 11}, seed + 6), nn::Mode::eval, layer_opts);
  }
  {
    nn::Activation layer(nn::ActivationKind::silu);
    run("silu", layer, gaussian({2, 7}, seed + 7), nn::Mode::eval, layer_opts);
  }
  {
    nn::Activation layer(nn::ActivationKind::tanh);
    run("tanh", layer, gaussian({2, 7}, seed + 8), nn::Mode::eval, layer_opts);
  }
  {
    nn::Dropout layer(0.3);
    run("dropout", layer, gaussian({2, 7}, seed + 9), nn::Mode::train, layer_opts);
  }
  for (models::Family f : models::kAllFamilies) {
    auto model = models::Model::build(models::ModelSpec::defaults(f), seed + 100);
    nn::Rng drop(seed + 200);
    nn::RunContext warm{nn::Mode::train, &drop};
    model->forward(gaussian({4, model->spec().input_length}, seed + 300), warm);
    run(std::string(models::family_name(f)), *model, gaussian({2, model->spec().input_length}, seed + 10),
        nn::Mode::eval, model_opts);
  }
  return out;
}

} // namespace kanae::tasks
