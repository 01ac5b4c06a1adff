#include "kanae/tasks/report.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace kanae::tasks {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json drift_json(const DriftSummary& d) { return {{"q50", d.q50}, {"q90", d.q90}, {"q99", d.q99}, {"max", d.max}}; }

// NaN and infinities have no JSON spelling; they become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  return out;
}

void write_matrix_csv(const fs::path& path, const std::string& header, const Tensor& m,
                      std::span<const int> labels) {
  auto out = open_out(path);
  out << header << '\n';
  for (std::size_t i = 0; i < m.dim(0); ++i) {
    out << i;
    if (!labels.empty())
      out << ',' << labels[i];
    for (std::size_t j = 0; j < m.dim(1); ++j)
      out << ',' << format_double(m.at(i, j));
    out << '\n';
  }
}

std::string numbered(const std::string& stem, std::size_t count) {
  std::string h;
  for (std::size_t j = 1; j <= count; ++j)
    h += "," + stem + std::to_string(j);
  return h;
}

} // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json report_to_json(const TaskReport& r, const json& extra) {
  json j;
  j["task"] = std::string(task_name(r.task));
  j["family"] = std::string(models::family_name(r.spec.family));
  j["variational"] = r.spec.variational;
  j["seed"] = r.seed;
  j["param_count"] = r.param_count;
  j["expected_param_count"] = r.expected_param_count;
  j["model_spec"] = models::to_json(r.spec);
  j["train_mse"] = r.train_mse;
  j["test_mse"] = r.test_mse;
  j["train_losses"] = r.train_losses;
  j["test_losses"] = r.test_losses;
  j["loss_trace"] = r.trace.epoch_loss;
  j["epochs_run"] = r.trace.epoch_loss.size();
  j["loss_drift"] = {{"train", drift_json(r.train_drift)}, {"test", drift_json(r.test_drift)}};
  // Published drift peaks for comparison only (hyperparameters unknown).
  j["reference_drift_peak"] = {{"KCAE", 0.006}, {"CAE", 0.035}};
  j["timing"] = {{"seconds_per_epoch", r.seconds_per_epoch},
                 {"forward_seconds_per_sample", r.forward_seconds_per_sample}};
  j["latent"] = {{"dim", r.latent_test.rank() == 2 ? r.latent_test.dim(1) : 0},
                 {"silhouette", number(r.latent_silhouette)}};
  if (r.denoising)
    j["denoising"] = {{"noise_sigma", r.denoising->noise_sigma}, {"baseline_mse", r.denoising->baseline_mse}};
  if (r.inpainting) {
    const auto& s = *r.inpainting;
    j["inpainting"] = {{"mask_ratio", s.mask_ratio},
                       {"mask_block", s.mask_block},
                       {"masked_count", s.masked_count},
                       {"unmasked_count", s.unmasked_count},
                       {"masked_mse", number(s.masked_mse)},
                       {"unmasked_mse", number(s.unmasked_mse)},
                       {"baseline_masked_mse", number(s.baseline_masked_mse)}};
  }
  if (r.anomaly) {
    const auto& a = *r.anomaly;
    j["anomaly"] = {{"normal_label", a.normal_label},
                    {"auc", a.auc},
                    {"threshold", a.threshold},
                    {"threshold_percentile", a.percentile},
                    {"scores", a.scores},
                    {"is_abnormal", a.is_abnormal},
                    {"confusion",
                     {{"true_positive", a.confusion.true_positive},
                      {"false_positive", a.confusion.false_positive},
                      {"true_negative", a.confusion.true_negative},
                      {"false_negative", a.confusion.false_negative}}}};
  }
  if (r.generation) {
    const auto& g = *r.generation;
    j["generation"] = {{"count", g.samples.dim(0)},
                       {"sample_mean", g.sample_mean},
                       {"sample_std", g.sample_std},
                       {"train_mean", g.train_mean},
                       {"train_std", g.train_std},
                       {"mean_abs_mean_gap", g.mean_abs_mean_gap},
                       {"mean_abs_std_gap", g.mean_abs_std_gap},
                       {"min_value", g.min_value},
                       {"max_value", g.max_value}};
  }
  for (const auto& [key, value] : extra.items())
    j[key] = value;
  return j;
}

void write_loss_csv(const fs::path& path, const std::string& split, std::span<const double> losses) {
  auto out = open_out(path);
  out << "sample_index,split,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i)
    out << i << ',' << split << ',' << format_double(losses[i]) << '\n';
}

std::vector<double> read_loss_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line); // header
  std::vector<double> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    char* end = nullptr;
    const double v = std::strtod(line.c_str() + comma + 1, &end);
    if (end == line.c_str() + comma + 1)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad loss value");
    out.push_back(v);
  }
  return out;
}

void write_run_artifacts(const fs::path& dir, const TaskRun& run, const json& extra) {
  fs::create_directories(dir);
  const TaskReport& r = run.report;
  {
    auto out = open_out(dir / "report.json");
    out << report_to_json(r, extra).dump(2) << '\n';
  }
  write_loss_csv(dir / "losses_train.csv", "train", r.train_losses);
  write_loss_csv(dir / "losses_test.csv", "test", r.test_losses);
  {
    auto out = open_out(dir / "trace.csv");
    out << "epoch,mean_train_loss\n";
    for (std::size_t e = 0; e < r.trace.epoch_loss.size(); ++e)
      out << e << ',' << format_double(r.trace.epoch_loss[e]) << '\n';
  }
  {
    auto out = open_out(dir / "timing.csv");
    out << "kind,index,seconds\n";
    for (std::size_t e = 0; e < r.trace.epoch_seconds.size(); ++e)
      out << "epoch," << e << ',' << format_double(r.trace.epoch_seconds[e]) << '\n';
    out << "forward_per_sample,0," << format_double(r.forward_seconds_per_sample) << '\n';
  }
  if (r.latent_test.rank() == 2) {
    write_matrix_csv(dir / "latent_test.csv", "sample_index,label" + numbered("z_", r.latent_test.dim(1)),
                     r.latent_test, r.test_labels);
    write_matrix_csv(dir / "latent_pca.csv", "sample_index,label,pc_1,pc_2", r.latent_pca, r.test_labels);
  }
  if (r.generation)
    write_matrix_csv(dir / "generated.csv", "sample_index" + numbered("x_", r.generation->samples.dim(1)),
                     r.generation->samples, {});
  if (run.model)
    run.model->save(dir / "model.kanae", {{"task", std::string(task_name(r.task))}, {"seed", r.seed}});
}

EfficiencyRow efficiency_row(const TaskReport& r) {
  return {std::string(task_name(r.task)), std::string(models::family_name(r.spec.family)), r.seed, r.param_count,
          r.test_mse, r.train_mse, r.seconds_per_epoch};
}

std::vector<EfficiencyRow> efficiency_table(std::span<const EfficiencyRow> rows) {
  std::vector<EfficiencyRow> out(rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(), [](const EfficiencyRow& a, const EfficiencyRow& b) {
    if (a.params != b.params)
      return a.params > b.params;
    return std::tie(a.family, a.task, a.seed) < std::tie(b.family, b.task, b.seed);
  });
  return out;
}

std::string efficiency_csv(std::span<const EfficiencyRow> rows) {
  std::ostringstream out;
  out << "task,family,seed,params,test_mse,train_mse,seconds_per_epoch\n";
  for (const auto& r : rows)
    out << r.task << ',' << r.family << ',' << r.seed << ',' << r.params << ',' << format_double(r.test_mse) << ','
        << format_double(r.train_mse) << ',' << format_double(r.seconds_per_epoch) << '\n';
  return out.str();
}

json efficiency_json(std::span<const EfficiencyRow> rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"task", r.task},
                   {"family", r.family},
                   {"seed", r.seed},
                   {"params", r.params},
                   {"test_mse", r.test_mse},
                   {"train_mse", r.train_mse},
                   {"seconds_per_epoch", r.seconds_per_epoch}});
  return arr;
}

std::string summary_markdown(std::span<const EfficiencyRow> rows, std::span<const std::string> failures) {
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  // Groups keep the order in which they first appear in the sorted table.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const EfficiencyRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.task, r.family);
    if (!groups.count(key))
      order.push_back(key);
    groups[key].push_back(&r);
  }
  std::ostringstream out;
  out << "# Benchmark summary\n\n";
  out << "| task | family | params | runs | median test MSE | median train MSE | median s/epoch |\n";
  out << "|---|---|---:|---:|---:|---:|---:|\n";
  char buf[64];
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> te, tr, sec;
    for (const auto* r : g) {
      te.push_back(r->test_mse);
      tr.push_back(r->train_mse);
      sec.push_back(r->seconds_per_epoch);
    }
    out << "| " << key.first << " | " << key.second << " | " << g.front()->params << " | " << g.size() << " | ";
    std::snprintf(buf, sizeof buf, "%.5f | %.5f | %.4f |\n", median(te), median(tr), median(sec));
    out << buf;
  }
  out << "\n## Runs\n\n| task | family | seed | params | test MSE | train MSE |\n|---|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f | %.6f |\n", r.test_mse, r.train_mse);
    out << "| " << r.task << " | " << r.family << " | " << r.seed << " | " << r.params << " | " << buf;
  }
  if (!failures.empty()) {
    out << "\n## Failed runs\n\n";
    for (const auto& f : failures)
      out << "- " << f << '\n';
  }
  return out.str();
}

} // namespace kanae::tasks
