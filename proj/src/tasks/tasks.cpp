#include "kanae/tasks/tasks.hpp"

#include "kanae/error.hpp"
#include "kanae/nn/loss.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace kanae::tasks {

namespace {

struct EvalInputs {
  Tensor inputs;
  std::vector<std::uint8_t> keep; // flattened like inputs; empty unless masking
};

EvalInputs corrupt_rows(const Tensor& clean, const data::Corruption& c, std::uint64_t sample_base) {
  EvalInputs out{clean, {}};
  if (c.kind == data::CorruptionKind::none)
    return out;
  const std::size_t width = clean.dim(1);
  if (c.kind == data::CorruptionKind::mask)
    out.keep.resize(clean.size());
  for (std::size_t r = 0; r < clean.dim(0); ++r) {
    auto res = data::corrupt(clean.row(r), c, sample_base + r, data::kEvaluationEpoch);
    std::copy(res.values.begin(), res.values.end(), out.inputs.data() + r * width);
    if (!out.keep.empty())
      std::copy(res.keep.begin(), res.keep.end(), out.keep.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

std::vector<double> column_mean(const Tensor& t) {
  std::vector<double> m(t.dim(1), 0.0);
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j)
      m[j] += t.at(i, j) / static_cast<double>(t.dim(0));
  return m;
}

std::vector<double> column_std(const Tensor& t, const std::vector<double>& m) {
  std::vector<double> s(t.dim(1), 0.0);
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j)
      s[j] += (t.at(i, j) - m[j]) * (t.at(i, j) - m[j]) / static_cast<double>(t.dim(0));
  for (double& v : s)
    v = std::sqrt(v);
  return s;
}

double mean_abs_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

} // namespace

std::string_view task_name(TaskKind task) {
  switch (task) {
  case TaskKind::reconstruction:
    return "reconstruction";
  case TaskKind::denoising:
    return "denoising";
  case TaskKind::inpainting:
    return "inpainting";
  case TaskKind::anomaly:
    return "anomaly";
  case TaskKind::generation:
    return "generation";
  }
  return "?";
}

std::optional<TaskKind> parse_task(std::string_view name) {
  for (TaskKind t : kAllTasks)
    if (task_name(t) == name)
      return t;
  return std::nullopt;
}

void TaskConfig::validate() const {
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };
  collect([&] { model.validate(); });
  collect([&] { train.validate(); });
  collect([&] { corruption.validate(); });
  if (task == TaskKind::generation && !model.variational)
    problems.push_back("task generation needs a variational model (model.variational=true)");
  if (!(anomaly_percentile >= 0.0 && anomaly_percentile <= 100.0))
    problems.push_back("anomaly percentile must lie in [0, 100]");
  if (task == TaskKind::generation && generated_samples < 1)
    problems.push_back("generation needs at least one sample");
  if (eval_batch < 1)
    problems.push_back("evaluation batch must be >= 1");
  if (!problems.empty()) {
    std::string msg = "invalid task config:";
    for (const auto& p : problems)
      msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

TaskRun run_task(const TaskConfig& config, const data::DatasetSplit& split) {
  config.validate();
  if (config.model.input_length != split.length)
    throw ConfigError("model.input_length " + std::to_string(config.model.input_length) +
                      " does not match the data length " + std::to_string(split.length));

  data::Corruption corruption = config.corruption;
  corruption.seed = config.seed;
  switch (config.task) {
  case TaskKind::denoising:
    corruption.kind = data::CorruptionKind::gaussian_noise;
    break;
  case TaskKind::inpainting:
    corruption.kind = data::CorruptionKind::mask;
    break;
  default:
    corruption.kind = data::CorruptionKind::none;
  }

  TaskRun run;
  TaskReport& rep = run.report;
  rep.task = config.task;
  rep.spec = config.model;
  rep.seed = config.seed;

  std::optional<int> normal_label;
  std::vector<data::LabeledSeries> train_subset;
  if (config.task == TaskKind::anomaly) {
    normal_label = config.normal_label.value_or(data::smallest_label(split.train));
    train_subset = data::filter_label(split.train, *normal_label);
    if (train_subset.size() < 2)
      throw ConfigError("anomaly detection needs at least two normal training series (label " +
                        std::to_string(*normal_label) + ")");
  } else {
    train_subset = split.train;
  }
  const Tensor train_clean = data::to_tensor(train_subset);
  const Tensor test_clean = data::to_tensor(split.test);
  if (test_clean.dim(0) == 0)
    throw ConfigError("test split is empty");

  run.model = models::Model::build(config.model, config.seed);
  models::Model& model = *run.model;
  rep.param_count = model.param_count();
  rep.expected_param_count = models::expected_param_count(config.model);

  optim::InputTransform transform;
  if (corruption.kind != data::CorruptionKind::none)
    transform = [&corruption](std::span<double> s, std::size_t sample, std::size_t epoch) {
      const auto r = data::corrupt(s, corruption, sample, epoch);
      std::copy(r.values.begin(), r.values.end(), s.begin());
    };
  optim::TrainConfig tc = config.train;
  tc.seed = config.seed;
  rep.trace = optim::train(model, train_clean, tc, transform);
  rep.seconds_per_epoch = mean(rep.trace.epoch_seconds);

  const EvalInputs train_in = corrupt_rows(train_clean, corruption, 0);
  const EvalInputs test_in = corrupt_rows(test_clean, corruption, kTestSampleBase);

  const Tensor train_out = optim::reconstruct(model, train_in.inputs, config.eval_batch);
  const auto t0 = std::chrono::steady_clock::now();
  const Tensor test_out = optim::reconstruct(model, test_in.inputs, config.eval_batch);
  rep.forward_seconds_per_sample = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
                                   static_cast<double>(test_clean.dim(0));

  rep.train_losses = nn::mse_loss(train_out, train_clean).per_sample;
  rep.test_losses = nn::mse_loss(test_out, test_clean).per_sample;
  rep.train_mse = mean(rep.train_losses);
  rep.test_mse = mean(rep.test_losses);
  rep.train_drift = summarize_drift(rep.train_losses);
  rep.test_drift = summarize_drift(rep.test_losses);

  rep.test_labels = data::labels_of(split.test);
  rep.latent_test = optim::encode_all(model, test_clean, config.eval_batch);
  rep.latent_pca = pca_project_2d(rep.latent_test, config.seed);
  rep.latent_silhouette = silhouette(rep.latent_test, rep.test_labels);

  if (config.task == TaskKind::denoising) {
    DenoisingStats d;
    d.noise_sigma = corruption.noise_sigma;
    d.baseline_mse = nn::mse_loss(test_in.inputs, test_clean).value;
    rep.denoising = d;
  }

  if (config.task == TaskKind::inpainting) {
    InpaintingStats s;
    s.mask_ratio = corruption.mask_ratio;
    s.mask_block = corruption.mask_block;
    double masked = 0.0, unmasked = 0.0, baseline = 0.0;
    for (std::size_t i = 0; i < test_clean.size(); ++i) {
      const double err = test_out[i] - test_clean[i];
      if (test_in.keep[i] == 0) {
        masked += err * err;
        baseline += test_clean[i] * test_clean[i];
        ++s.masked_count;
      } else {
        unmasked += err * err;
        ++s.unmasked_count;
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.masked_mse = s.masked_count ? masked / static_cast<double>(s.masked_count) : nan;
    s.unmasked_mse = s.unmasked_count ? unmasked / static_cast<double>(s.unmasked_count) : nan;
    s.baseline_masked_mse = s.masked_count ? baseline / static_cast<double>(s.masked_count) : nan;
    rep.inpainting = s;
  }

  if (config.task == TaskKind::anomaly) {
    AnomalyStats a;
    a.normal_label = *normal_label;
    a.scores = rep.test_losses;
    for (int l : rep.test_labels)
      a.is_abnormal.push_back(l != a.normal_label ? 1 : 0);
    a.auc = auc(a.scores, a.is_abnormal);
    a.percentile = config.anomaly_percentile;
    a.threshold = quantile(rep.train_losses, config.anomaly_percentile / 100.0);
    a.confusion = confusion_at(a.scores, a.is_abnormal, a.threshold);
    rep.anomaly = std::move(a);
  }

  if (config.task == TaskKind::generation) {
    GenerationStats g;
    nn::Rng prior = nn::seeded_rng(config.seed, kPriorStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor z({config.generated_samples, config.model.latent_dim});
    for (double& v : z.values())
      v = normal(prior);
    nn::RunContext ev{nn::Mode::eval, nullptr};
    g.samples = model.decode(z, ev);
    require_finite(g.samples, "generated samples");
    g.sample_mean = column_mean(g.samples);
    g.sample_std = column_std(g.samples, g.sample_mean);
    g.train_mean = column_mean(train_clean);
    g.train_std = column_std(train_clean, g.train_mean);
    g.mean_abs_mean_gap = mean_abs_gap(g.sample_mean, g.train_mean);
    g.mean_abs_std_gap = mean_abs_gap(g.sample_std, g.train_std);
    const auto [lo, hi] = std::minmax_element(g.samples.values().begin(), g.samples.values().end());
    g.min_value = *lo;
    g.max_value = *hi;
    rep.generation = std::move(g);
  }
  return run;
}

namespace {

TaskRun run_as(TaskKind task, TaskConfig config, const data::DatasetSplit& split) {
  config.task = task;
  return run_task(config, split);
}

} // namespace

TaskRun run_reconstruction(TaskConfig config, const data::DatasetSplit& split) {
  return run_as(TaskKind::reconstruction, std::move(config), split);
}
TaskRun run_denoising(TaskConfig config, const data::DatasetSplit& split) {
  return run_as(TaskKind::denoising, std::move(config), split);
}
TaskRun run_inpainting(TaskConfig config, const data::DatasetSplit& split) {
  return run_as(TaskKind::inpainting, std::move(config), split);
}
TaskRun run_anomaly(TaskConfig config, const data::DatasetSplit& split) {
  return run_as(TaskKind::anomaly, std::move(config), split);
}
TaskRun run_generation(TaskConfig config, const data::DatasetSplit& split) {
  return run_as(TaskKind::generation, std::move(config), split);
}

} // namespace kanae::tasks
