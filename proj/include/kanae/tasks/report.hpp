#pragma once

#include "kanae/tasks/tasks.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace kanae::tasks {

/// %.17g: enough digits for any double to survive a text round trip.
std::string format_double(double v);

/// report.json content. `extra` is merged in at the top level (dataset
/// facts, effective config).
nlohmann::json report_to_json(const TaskReport& report, const nlohmann::json& extra = nlohmann::json::object());

/// `sample_index,split,loss` rows in sample order.
void write_loss_csv(const std::filesystem::path& path, const std::string& split, std::span<const double> losses);
/// Inverse of write_loss_csv; throws ParseError on malformed rows.
std::vector<double> read_loss_csv(const std::filesystem::path& path);

/// Writes report.json and the CSVs of one run (plus model.kanae when the
/// model is present) into `dir`, creating it.
void write_run_artifacts(const std::filesystem::path& dir, const TaskRun& run,
                         const nlohmann::json& extra = nlohmann::json::object());

struct EfficiencyRow {
  std::string task;
  std::string family;
  std::uint64_t seed = 0;
  std::size_t params = 0;
  double test_mse = 0.0;
  double train_mse = 0.0;
  double seconds_per_epoch = 0.0;
};

EfficiencyRow efficiency_row(const TaskReport& report);

/// One row per report, sorted by parameter count (descending), then family,
/// task and seed.
std::vector<EfficiencyRow> efficiency_table(std::span<const EfficiencyRow> rows);

std::string efficiency_csv(std::span<const EfficiencyRow> rows);
nlohmann::json efficiency_json(std::span<const EfficiencyRow> rows);

/// Markdown: per-(task, family) medians in table order, then every run.
std::string summary_markdown(std::span<const EfficiencyRow> rows, std::span<const std::string> failures = {});

} // namespace kanae::tasks
