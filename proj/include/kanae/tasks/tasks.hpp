#pragma once

#include "kanae/data/corruption.hpp"
#include "kanae/data/dataset.hpp"
#include "kanae/models/model.hpp"
#include "kanae/optim/train.hpp"
#include "kanae/tasks/metrics.hpp"

#include <optional>
#include <string_view>

namespace kanae::tasks {

enum class TaskKind { reconstruction, denoising, inpainting, anomaly, generation };

inline constexpr TaskKind kAllTasks[] = {TaskKind::reconstruction, TaskKind::denoising, TaskKind::inpainting,
                                         TaskKind::anomaly, TaskKind::generation};

std::string_view task_name(TaskKind task);
std::optional<TaskKind> parse_task(std::string_view name);

struct TaskConfig {
  TaskKind task = TaskKind::reconstruction;
  models::ModelSpec model = models::ModelSpec::defaults(models::Family::kcae);
  optim::TrainConfig train;
  /// Denoising uses the noise settings, inpainting the mask settings; the
  /// kind is set by the task. Its seed is replaced by the run seed.
  data::Corruption corruption;
  /// Seeds model initialization, batch order, dropout and corruption.
  std::uint64_t seed = 0;
  /// Anomaly detection: class treated as normal; nullopt picks the smallest label.
  std::optional<int> normal_label;
  double anomaly_percentile = 95.0;
  std::size_t generated_samples = 64;
  std::size_t eval_batch = 64;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

struct DenoisingStats {
  double noise_sigma = 0.0;
  double baseline_mse = 0.0; // MSE(noisy, clean): the do-nothing denoiser
};

struct InpaintingStats {
  double mask_ratio = 0.0;
  std::size_t mask_block = 0;
  std::size_t masked_count = 0;
  std::size_t unmasked_count = 0;
  double masked_mse = 0.0;
  double unmasked_mse = 0.0;
  double baseline_masked_mse = 0.0; // zero fill
};

struct AnomalyStats {
  int normal_label = 0;
  std::vector<double> scores; // test reconstruction MSE per sample
  std::vector<int> is_abnormal;
  double auc = 0.0;
  double threshold = 0.0;
  double percentile = 95.0;
  Confusion confusion;
};

struct GenerationStats {
  Tensor samples; // [count x n] decoded prior draws, normalized scale
  std::vector<double> sample_mean, sample_std; // per position
  std::vector<double> train_mean, train_std;
  double mean_abs_mean_gap = 0.0;
  double mean_abs_std_gap = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

struct TaskReport {
  TaskKind task = TaskKind::reconstruction;
  models::ModelSpec spec;
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  std::size_t expected_param_count = 0;

  optim::LossTrace trace;
  std::vector<double> train_losses; // eval mode, per sample, same inputs as training
  std::vector<double> test_losses;
  double train_mse = 0.0; // mean of train_losses
  double test_mse = 0.0;  // mean of test_losses
  DriftSummary train_drift, test_drift;

  double seconds_per_epoch = 0.0;
  double forward_seconds_per_sample = 0.0;

  std::vector<int> test_labels;
  Tensor latent_test; // [test x k]
  Tensor latent_pca;  // [test x 2]
  double latent_silhouette = 0.0;

  std::optional<DenoisingStats> denoising;
  std::optional<InpaintingStats> inpainting;
  std::optional<AnomalyStats> anomaly;
  std::optional<GenerationStats> generation;
};

struct TaskRun {
  TaskReport report;
  std::unique_ptr<models::Model> model;
};

/// Trains and evaluates one (task, family, seed) combination on a
/// normalized split. All five tasks share one training loop and differ only
/// in the input transform, the training subset and the extra evaluation.
TaskRun run_task(const TaskConfig& config, const data::DatasetSplit& split);

TaskRun run_reconstruction(TaskConfig config, const data::DatasetSplit& split);
TaskRun run_denoising(TaskConfig config, const data::DatasetSplit& split);
TaskRun run_inpainting(TaskConfig config, const data::DatasetSplit& split);
TaskRun run_anomaly(TaskConfig config, const data::DatasetSplit& split);
TaskRun run_generation(TaskConfig config, const data::DatasetSplit& split);

/// Sample ids used when corrupting evaluation data; disjoint from the
/// training ids 0..N-1 so train and test draws never coincide.
inline constexpr std::uint64_t kTestSampleBase = std::uint64_t{1} << 32;

/// Generator stream for prior samples in the generation task.
inline constexpr std::uint64_t kPriorStream = 5;

} // namespace kanae::tasks
