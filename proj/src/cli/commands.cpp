#include "kanae/cli/commands.hpp"

#include "kanae/cli/config.hpp"
#include "kanae/error.hpp"
#include "kanae/nn/checkpoint.hpp"
#include "kanae/tasks/benchmarks.hpp"
#include "kanae/tasks/report.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <ostream>
#include <thread>

namespace kanae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigSources {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides; // leftover --section.key[=value] arguments
};

// Precedence, lowest first: defaults, config file, KANAE_OUT, flags.
Config assemble(const ConfigSources& src, std::vector<std::string>& errors) {
  Config cfg = Config::defaults();
  if (!src.config_path.empty())
    cfg.merge_file(src.config_path, errors);
  if (const char* env = std::getenv("KANAE_OUT"); env && *env)
    cfg.set("run.output", env, errors);
  for (std::size_t i = 0; i < src.overrides.size(); ++i) {
    const std::string& arg = src.overrides[i];
    if (arg.rfind("--", 0) != 0) {
      errors.push_back("unexpected argument '" + arg + "'");
      continue;
    }
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i + 1 < src.overrides.size() && src.overrides[i + 1].rfind("--", 0) != 0) {
      value = src.overrides[++i];
    } else {
      errors.push_back("flag --" + key + " needs a value");
      continue;
    }
    if (!cfg.is_known(key))
      errors.push_back("unknown option --" + key);
    else
      cfg.set(key, value, errors);
  }
  if (src.seed)
    cfg.set("run.seeds", std::to_string(*src.seed), errors);
  return cfg;
}

// Source errors (bad lines, unknown keys) and value errors in one report.
std::pair<Config, RunConfig> load_config(const ConfigSources& src) {
  std::vector<std::string> errors;
  Config cfg = assemble(src, errors);
  RunConfig rc;
  try {
    rc = resolve(cfg);
  } catch (const ConfigError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line))
      errors.push_back(line.substr(std::min(line.find("- ") + 2, line.size())));
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors)
      msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return {std::move(cfg), std::move(rc)};
}

struct LoadedData {
  data::DatasetSplit split;
  json facts;
};

json class_counts(std::span<const data::LabeledSeries> s) {
  std::map<int, std::size_t> counts;
  for (const auto& x : s)
    ++counts[x.label];
  json j = json::object();
  for (const auto& [label, n] : counts)
    j[std::to_string(label)] = n;
  return j;
}

// The observed series length wins over the configured one; a mismatch is
// reported, not fatal.
LoadedData load_data(RunConfig& rc, std::ostream& err) {
  const auto train = data::load_ucr(rc.train_path);
  const auto test = data::load_ucr(rc.test_path);
  if (train.length != test.length)
    throw ParseError("train series have length " + std::to_string(train.length) + " but test series have " +
                     std::to_string(test.length));
  LoadedData d;
  d.split = data::make_split(train.series, test.series);
  const bool mismatch = train.length != rc.input_length;
  if (mismatch) {
    err << "warning: observed series length " << train.length << " differs from data.input_length "
        << rc.input_length << "; using " << train.length << "\n";
    rc.base.model.input_length = train.length;
  }
  d.facts = {{"train_path", rc.train_path.string()},
             {"test_path", rc.test_path.string()},
             {"train_count", train.series.size()},
             {"test_count", test.series.size()},
             {"train_class_counts", class_counts(train.series)},
             {"test_class_counts", class_counts(test.series)},
             {"configured_length", rc.input_length},
             {"observed_length", train.length},
             {"length_mismatch", mismatch},
             {"normalization", {{"mean", d.split.stats.mean}, {"std", d.split.stats.std}}}};
  return d;
}

std::string seed_dir(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seed%02llu", static_cast<unsigned long long>(seed));
  return buf;
}

fs::path run_dir(const RunConfig& rc, tasks::TaskKind t, models::Family f, std::uint64_t seed) {
  return rc.output / std::string(tasks::task_name(t)) / std::string(models::family_name(f)) / seed_dir(seed);
}

// Config text that re-runs exactly this (task, family, seed).
Config effective_for(const Config& base, tasks::TaskKind t, models::Family f, std::uint64_t seed) {
  Config c = base;
  std::vector<std::string> ignored;
  c.set("run.task", std::string(tasks::task_name(t)), ignored);
  c.set("model.family", std::string(models::family_name(f)), ignored);
  c.set("run.seeds", std::to_string(seed), ignored);
  return c;
}

tasks::TaskReport execute_run(const Config& cfg, const RunConfig& rc, const LoadedData& data, tasks::TaskKind t,
                              models::Family f, std::uint64_t seed) {
  const tasks::TaskConfig tc = rc.task_config(t, f, seed);
  tasks::TaskRun run = tasks::run_task(tc, data.split);
  const Config eff = effective_for(cfg, t, f, seed);
  json cfg_json = json::object();
  for (const auto& [k, v] : eff.values())
    cfg_json[k] = v;
  const fs::path dir = run_dir(rc, t, f, seed);
  tasks::write_run_artifacts(dir, run, {{"dataset", data.facts}, {"config", cfg_json}});
  std::ofstream(dir / "config.effective") << eff.to_text();
  return std::move(run.report);
}

int cmd_train(const ConfigSources& src, std::ostream& out, std::ostream& err) {
  auto [cfg, rc] = load_config(src);
  const LoadedData data = load_data(rc, err);
  const std::uint64_t seed = rc.seeds.front();
  const auto rep = execute_run(cfg, rc, data, rc.task, rc.family, seed);
  out << tasks::task_name(rc.task) << ' ' << models::family_name(rc.family) << " seed " << seed
      << ": params " << rep.param_count << ", train MSE " << tasks::format_double(rep.train_mse) << ", test MSE "
      << tasks::format_double(rep.test_mse) << "\n"
      << "wrote " << run_dir(rc, rc.task, rc.family, seed).string() << "\n";
  return kExitOk;
}

int cmd_bench(const ConfigSources& src, std::size_t jobs, bool force, std::ostream& out, std::ostream& err) {
  auto [cfg, rc] = load_config(src);
  if (fs::exists(rc.output) && !fs::is_empty(rc.output) && !force)
    throw ConfigError("output directory " + rc.output.string() + " is not empty; pass --force to overwrite");
  const LoadedData data = load_data(rc, err);

  struct Job {
    tasks::TaskKind task;
    models::Family family;
    std::uint64_t seed;
  };
  std::vector<Job> queue;
  for (auto t : rc.bench_tasks)
    for (auto f : rc.bench_families)
      for (auto s : rc.seeds)
        queue.push_back({t, f, s});

  std::vector<std::optional<tasks::EfficiencyRow>> rows(queue.size());
  std::vector<std::string> failures(queue.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < queue.size(); i = next++) {
      const Job& j = queue[i];
      const std::string label = std::string(tasks::task_name(j.task)) + "/" +
                                std::string(models::family_name(j.family)) + "/" + seed_dir(j.seed);
      try {
        const auto rep = execute_run(cfg, rc, data, j.task, j.family, j.seed);
        rows[i] = tasks::efficiency_row(rep);
        std::lock_guard lock(io);
        out << label << ": test MSE " << tasks::format_double(rep.test_mse) << "\n";
      } catch (const std::exception& e) {
        failures[i] = label + ": " + e.what();
        std::lock_guard lock(io);
        err << "run failed: " << failures[i] << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < std::max<std::size_t>(jobs, 1); ++w)
    pool.emplace_back(worker);
  worker();
  for (auto& th : pool)
    th.join();

  std::vector<tasks::EfficiencyRow> done;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (rows[i])
      done.push_back(*rows[i]);
    if (!failures[i].empty())
      failed.push_back(failures[i]);
  }
  const auto table = tasks::efficiency_table(done);
  fs::create_directories(rc.output);
  std::ofstream(rc.output / "efficiency.csv") << tasks::efficiency_csv(table);
  std::ofstream(rc.output / "efficiency.json") << tasks::efficiency_json(table).dump(2) << "\n";
  std::ofstream(rc.output / "summary.md") << tasks::summary_markdown(table, failed);
  out << done.size() << " of " << queue.size() << " runs succeeded; summary in "
      << (rc.output / "summary.md").string() << "\n";
  return failed.empty() ? kExitOk : kExitRunFailure;
}

int cmd_gradcheck(bool corrupt, std::uint64_t seed, std::ostream& out) {
  const auto suite = tasks::gradcheck_suite(corrupt ? 1.01 : 1.0, seed);
  bool ok = true;
  char buf[160];
  out << "subject            worst_rel_error  tolerance  checked  result\n";
  for (const auto& e : suite) {
    std::snprintf(buf, sizeof buf, "%-18s %15.3e  %9.0e  %7zu  %s\n", e.subject.c_str(), e.report.worst_rel_error,
                  e.report.tolerance, e.report.checked, e.report.passed ? "PASS" : "FAIL");
    out << buf;
    ok = ok && e.report.passed;
  }
  return ok ? kExitOk : kExitRunFailure;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  out << nn::read_checkpoint_header(path).dump(2) << "\n";
  return kExitOk;
}

struct SynthOptions {
  std::string out_dir;
  std::size_t length = 187;
  std::uint64_t seed = 0;
  std::size_t train_normal = 50, train_abnormal = 50, test_normal = 50, test_abnormal = 50;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  fs::create_directories(o.out_dir);
  const auto train = data::synthetic_heartbeats(o.train_normal, o.train_abnormal, o.length, o.seed);
  const auto test = data::synthetic_heartbeats(o.test_normal, o.test_abnormal, o.length, o.seed + 1);
  data::write_ucr(fs::path(o.out_dir) / "train.tsv", train);
  data::write_ucr(fs::path(o.out_dir) / "test.tsv", test);
  out << "wrote " << (fs::path(o.out_dir) / "train.tsv").string() << " and "
      << (fs::path(o.out_dir) / "test.tsv").string() << "\n";
  return kExitOk;
}

int cmd_timing(const std::vector<std::size_t>& widths, const std::vector<std::size_t>& channels,
               std::size_t iterations, const std::string& out_file, std::ostream& out) {
  tasks::TimingOptions o;
  o.iterations = std::max<std::size_t>(iterations, 100);
  const auto pairs = tasks::timing_benchmark(widths, channels, o);
  const std::string csv = tasks::timing_csv(pairs);
  out << csv;
  if (!out_file.empty())
    std::ofstream(out_file) << csv;
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kolmogorov-Arnold and MLP autoencoders for 1-D signals", "kanae"};
  app.require_subcommand(1);

  ConfigSources train_src, bench_src;
  std::optional<std::uint64_t> train_seed, bench_seed;

  auto* train = app.add_subcommand("train", "train and evaluate one (task, family, seed) run");
  train->add_option("-c,--config", train_src.config_path, "config file");
  train->add_option("--seed", train_seed, "seed for this run (beats run.seeds)");
  train->allow_extras();

  std::size_t jobs = 1;
  bool force = false;
  auto* bench = app.add_subcommand("bench", "run every family x task x seed and build the efficiency table");
  bench->add_option("-c,--config", bench_src.config_path, "config file");
  bench->add_option("--seed", bench_seed, "single seed (beats run.seeds)");
  bench->add_option("-j,--jobs", jobs, "runs in parallel")->check(CLI::PositiveNumber);
  bench->add_flag("--force", force, "reuse a non-empty output directory");
  bench->allow_extras();

  bool corrupt = false;
  std::uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every layer type and model");
  gradcheck->add_flag("--corrupt-gradient", corrupt, "scale analytic gradients by 1.01 (negative control)");
  gradcheck->add_option("--seed", gc_seed, "seed for inputs and weights");

  std::string checkpoint;
  auto* inspect = app.add_subcommand("inspect", "print the JSON header of a checkpoint");
  inspect->add_option("checkpoint", checkpoint, "checkpoint file")->required();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic heartbeat train/test pair");
  synth->add_option("-o,--out", synth_opts.out_dir, "output directory")->required();
  synth->add_option("--length", synth_opts.length, "series length");
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--train-normal", synth_opts.train_normal);
  synth->add_option("--train-abnormal", synth_opts.train_abnormal);
  synth->add_option("--test-normal", synth_opts.test_normal);
  synth->add_option("--test-abnormal", synth_opts.test_abnormal);

  std::vector<std::size_t> widths{64, 128, 256, 512}, channels{8, 16};
  std::size_t iterations = 100;
  std::string timing_out;
  auto* timing = app.add_subcommand("timing", "median forward time of KAN layers against their plain twins");
  timing->add_option("--widths", widths, "linear widths")->delimiter(',');
  timing->add_option("--channels", channels, "conv channel counts")->delimiter(',');
  timing->add_option("--iterations", iterations, "timed forwards (>= 100)");
  timing->add_option("-o,--out", timing_out, "also write the CSV here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*train) {
      train_src.seed = train_seed;
      train_src.overrides = train->remaining();
      return cmd_train(train_src, out, err);
    }
    if (*bench) {
      bench_src.seed = bench_seed;
      bench_src.overrides = bench->remaining();
      return cmd_bench(bench_src, jobs, force, out, err);
    }
    if (*gradcheck)
      return cmd_gradcheck(corrupt, gc_seed, out);
    if (*inspect)
      return cmd_inspect(checkpoint, out);
    if (*synth)
      return cmd_synth(synth_opts, out);
    if (*timing)
      return cmd_timing(widths, channels, iterations, timing_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitConfigError;
}

} // namespace kanae::cli
