#pragma once

#include "kanae/nn/layer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace kanae::nn {

struct GradcheckOptions {
  double step = 1e-5;      // central-difference step
  double tolerance = 1e-5; // on the relative error below
  // Relative error is |a - n| / max(|a|, |n|, magnitude_floor), so entries
  // whose true gradient is below the floor are compared absolutely.
  double magnitude_floor = 1e-4;
  std::size_t max_entries = 400; // per subject; tensors larger than their share are sampled
  std::uint64_t seed = 0;
  double analytic_scale = 1.0; // negative-control hook: scales analytic gradients
};

struct GradcheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradcheckReport {
  std::string subject;
  std::size_t checked = 0;
  double worst_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::vector<GradcheckEntry> worst; // largest errors first, at most 5
};

/// One tensor to perturb, with the analytic gradient of the scalar loss
/// with respect to it.
struct GradientProbe {
  std::string name;
  Tensor* value;
  const Tensor* analytic;
};

double relative_error(double analytic, double numeric, double magnitude_floor);

/// Compares analytic gradients with central differences of `loss`. The
/// probes' values are restored after each perturbation.
GradcheckReport check_gradients(const std::string& subject, const std::vector<GradientProbe>& probes,
                                const std::function<double()>& loss, const GradcheckOptions& options);

/// Checks a layer under loss = sum(r * layer(x)) with a seeded random r,
/// covering the input and every parameter. `mode` selects train/eval
/// behaviour; each evaluation gets an identically seeded generator.
GradcheckReport gradcheck_layer(const std::string& subject, Layer& layer, const Tensor& input, Mode mode,
                                const GradcheckOptions& options);

} // namespace kanae::nn
