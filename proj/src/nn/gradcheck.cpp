#include "kanae/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kanae::nn {

double relative_error(double analytic, double numeric, double magnitude_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), magnitude_floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport check_gradients(const std::string& subject, const std::vector<GradientProbe>& probes,
                                const std::function<double()>& loss, const GradcheckOptions& options) {
  GradcheckReport report;
  report.subject = subject;
  report.tolerance = options.tolerance;
  if (probes.empty())
    return report;

  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t share = std::max<std::size_t>(4, options.max_entries / probes.size());
  std::vector<GradcheckEntry> entries;

  for (const auto& probe : probes) {
    Tensor& value = *probe.value;
    std::vector<std::size_t> indices(value.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (indices.size() > share) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(share);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      const double saved = value[i];
      value[i] = saved + options.step;
      const double up = loss();
      value[i] = saved - options.step;
      const double down = loss();
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = (*probe.analytic)[i] * options.analytic_scale;
      entries.push_back({probe.name, i, analytic, numeric,
                         relative_error(analytic, numeric, options.magnitude_floor)});
    }
  }

  report.checked = entries.size();
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.rel_error > b.rel_error; });
  report.worst_rel_error = entries.front().rel_error;
  report.passed = report.worst_rel_error < options.tolerance;
  entries.resize(std::min<std::size_t>(entries.size(), 5));
  report.worst = std::move(entries);
  return report;
}

GradcheckReport gradcheck_layer(const std::string& subject, Layer& layer, const Tensor& input, Mode mode,
                                const GradcheckOptions& options) {
  Tensor x = input;
  auto run = [&](Rng& rng) {
    RunContext ctx{mode, &rng};
    return layer.forward(x, ctx);
  };

  Rng seed_rng(options.seed);
  const std::uint64_t forward_seed = seed_rng();
  Rng fwd(forward_seed);
  Tensor y = run(fwd);

  Tensor projection(y.shape());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : projection.values())
    v = normal(seed_rng);

  layer.zero_grad();
  Tensor grad_input = layer.backward(projection);

  auto params = layer.parameters();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto& p : params)
    analytic.push_back(p.param->grad);

  std::vector<GradientProbe> probes;
  probes.push_back({"input", &x, &grad_input});
  for (std::size_t i = 0; i < params.size(); ++i)
    probes.push_back({params[i].name, &params[i].param->value, &analytic[i]});

  auto loss = [&]() {
    Rng r(forward_seed);
    return dot(run(r), projection);
  };
  return check_gradients(subject, probes, loss, options);
}

} // namespace kanae::nn
