#pragma once

#include "kanae/tasks/tasks.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kanae::cli {

/// Flat key/value settings with dotted section names ("train.epochs").
/// Every known key has a default; unknown keys are rejected.
class Config {
public:
  /// All keys at their defaults.
  static Config defaults();

  /// Parses `key = value` lines. Blank lines and lines starting with '#' or
  /// ';' are skipped; a `[section]` line prefixes later keys with
  /// "section.". Problems are appended to `errors` (with line numbers).
  void merge_text(const std::string& text, const std::string& origin, std::vector<std::string>& errors);
  void merge_file(const std::filesystem::path& path, std::vector<std::string>& errors);

  /// Sets a known key; unknown keys are appended to `errors`.
  void set(const std::string& key, const std::string& value, std::vector<std::string>& errors);

  const std::string& get(const std::string& key) const;
  bool is_known(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// `key = value` lines in key order; merge_text of this reproduces the config.
  std::string to_text() const;

private:
  std::map<std::string, std::string> values_;
};

/// Typed view of a Config.
struct RunConfig {
  tasks::TaskKind task = tasks::TaskKind::reconstruction; // train
  models::Family family = models::Family::kcae;          // train
  std::vector<tasks::TaskKind> bench_tasks;
  std::vector<models::Family> bench_families;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::size_t input_length = 187;
  /// Template for every run. Scalars of `base.model` are copied into each
  /// family's defaults; hidden/channels only when set explicitly.
  tasks::TaskConfig base;
  bool hidden_set = false;
  bool channels_set = false;

  tasks::TaskConfig task_config(tasks::TaskKind task, models::Family family, std::uint64_t seed) const;
};

/// Converts and validates every key, then checks cross-field constraints
/// (dataset files exist, seeds nonempty). Throws one ConfigError listing
/// every problem. `check_paths` = false skips the filesystem checks.
RunConfig resolve(const Config& config, bool check_paths = true);

/// "a, b,c" -> {"a","b","c"}; empty input gives an empty list.
std::vector<std::string> split_list(const std::string& text);

} // namespace kanae::cli
