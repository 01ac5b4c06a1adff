#include "kanae/cli/config.hpp"

#include "kanae/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace kanae::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Collects conversion problems instead of throwing on the first one.
class Reader {
public:
  explicit Reader(const Config& c) : config_(c) {}

  const std::string& raw(const std::string& key) { return config_.get(key); }

  std::uint64_t u64(const std::string& key, std::uint64_t min = 0) {
    const std::string v = raw(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      fail(key, v, "a non-negative integer");
      return min;
    }
    if (out < min)
      errors.push_back(key + " must be >= " + std::to_string(min) + " (got " + v + ")");
    return out;
  }

  std::size_t size(const std::string& key, std::size_t min = 0) { return static_cast<std::size_t>(u64(key, min)); }

  double real(const std::string& key) {
    const std::string v = raw(key);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      fail(key, v, "a number");
      return 0.0;
    }
    return out;
  }

  bool boolean(const std::string& key) {
    const std::string v = lower(raw(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on")
      return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
      return false;
    fail(key, raw(key), "true or false");
    return false;
  }

  std::vector<std::size_t> sizes(const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(raw(key))) {
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
        fail(key, raw(key), "a comma-separated list of positive integers");
        return {};
      }
      out.push_back(v);
    }
    return out;
  }

  models::Family family(const std::string& key, const std::string& text) {
    if (auto f = models::parse_family(text))
      return *f;
    fail(key, text, "one of AE, KAE, CAE, KCAE");
    return models::Family::kcae;
  }

  tasks::TaskKind task(const std::string& key, const std::string& text) {
    if (auto t = tasks::parse_task(lower(text)))
      return *t;
    fail(key, text, "one of reconstruction, denoising, inpainting, anomaly, generation");
    return tasks::TaskKind::reconstruction;
  }

  std::vector<std::string> errors;

private:
  void fail(const std::string& key, const std::string& value, const std::string& expected) {
    errors.push_back(key + " must be " + expected + " (got '" + value + "')");
  }
  const Config& config_;
};

const std::vector<std::pair<std::string, std::string>>& default_entries() {
  static const std::vector<std::pair<std::string, std::string>> entries{
      {"run.task", "reconstruction"},
      {"run.seeds", "0"},
      {"run.output", "runs"},
      {"run.precision", "float64"},
      {"bench.tasks", "reconstruction"},
      {"bench.families", "AE,KAE,CAE,KCAE"},
      {"data.train", ""},
      {"data.test", ""},
      {"data.input_length", "187"},
      {"data.normal_label", "auto"},
      {"model.family", "KCAE"},
      {"model.latent_dim", "32"},
      {"model.hidden", ""},
      {"model.channels", ""},
      {"model.kernel", "5"},
      {"model.stride", "2"},
      {"model.padding", "2"},
      {"model.spline_order", "4"},
      {"model.grid_size", "5"},
      {"model.grid_min", "-2"},
      {"model.grid_max", "2"},
      {"model.batchnorm", "true"},
      {"model.dropout", "true"},
      {"model.dropout_rate", "0.1"},
      {"model.variational", "false"},
      {"model.kl_beta", "0.001"},
      {"train.epochs", "300"},
      {"train.batch_size", "16"},
      {"train.optimizer", "adam"},
      {"train.lr", "0.001"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.eps", "1e-8"},
      {"train.momentum", "0"},
      {"train.sample_latent", "true"},
      {"train.smoothness", "0"},
      {"corruption.noise_sigma", "0.3"},
      {"corruption.mask_ratio", "0.2"},
      {"corruption.mask_block", "10"},
      {"anomaly.percentile", "95"},
      {"generation.samples", "64"},
      {"eval.batch_size", "64"},
  };
  return entries;
}

} // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty())
      out.push_back(item);
  }
  return out;
}

Config Config::defaults() {
  Config c;
  for (const auto& [k, v] : default_entries())
    c.values_[k] = v;
  return c;
}

void Config::set(const std::string& key, const std::string& value, std::vector<std::string>& errors) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    errors.push_back("unknown key '" + key + "'");
    return;
  }
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

void Config::merge_text(const std::string& text, const std::string& origin, std::vector<std::string>& errors) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (body.empty() || body[0] == '#' || body[0] == ';')
      continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        errors.push_back(where + "malformed section header '" + body + "'");
        continue;
      }
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected 'key = value', got '" + body + "'");
      continue;
    }
    std::string key = trim(body.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos)
      key = section + "." + key;
    std::vector<std::string> local;
    set(key, trim(body.substr(eq + 1)), local);
    for (auto& e : local)
      errors.push_back(where + e);
  }
}

void Config::merge_file(const std::filesystem::path& path, std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.push_back("cannot read config file " + path.string());
    return;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string(), errors);
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_)
    out += k + " = " + v + "\n";
  return out;
}

tasks::TaskConfig RunConfig::task_config(tasks::TaskKind t, models::Family f, std::uint64_t seed) const {
  tasks::TaskConfig c = base;
  c.task = t;
  c.seed = seed;
  const models::ModelSpec& m = base.model;
  models::ModelSpec s = models::ModelSpec::defaults(f);
  if (hidden_set)
    s.hidden = m.hidden;
  if (channels_set)
    s.channels = m.channels;
  s.input_length = m.input_length;
  s.latent_dim = m.latent_dim;
  s.kernel = m.kernel;
  s.stride = m.stride;
  s.padding = m.padding;
  s.grid = m.grid;
  s.batchnorm = m.batchnorm;
  s.dropout = m.dropout;
  s.dropout_rate = m.dropout_rate;
  s.variational = m.variational;
  s.kl_beta = m.kl_beta;
  c.model = s;
  return c;
}

RunConfig resolve(const Config& config, bool check_paths) {
  Reader r(config);
  RunConfig rc;

  rc.task = r.task("run.task", r.raw("run.task"));
  rc.family = r.family("model.family", r.raw("model.family"));
  for (const auto& t : split_list(r.raw("bench.tasks")))
    rc.bench_tasks.push_back(r.task("bench.tasks", t));
  for (const auto& f : split_list(r.raw("bench.families")))
    rc.bench_families.push_back(r.family("bench.families", f));
  if (rc.bench_tasks.empty())
    r.errors.push_back("bench.tasks must name at least one task");
  if (rc.bench_families.empty())
    r.errors.push_back("bench.families must name at least one family");

  for (const auto& item : split_list(r.raw("run.seeds"))) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      r.errors.push_back("run.seeds must be a comma-separated list of non-negative integers (got '" +
                         r.raw("run.seeds") + "')");
    else
      rc.seeds.push_back(v);
  }
  if (rc.seeds.empty())
    r.errors.push_back("run.seeds must list at least one seed");

  rc.output = r.raw("run.output");
  if (rc.output.empty())
    r.errors.push_back("run.output must not be empty");
  if (lower(r.raw("run.precision")) != "float64")
    r.errors.push_back("run.precision must be float64 (got '" + r.raw("run.precision") + "')");

  rc.train_path = r.raw("data.train");
  rc.test_path = r.raw("data.test");
  if (check_paths) {
    for (const auto& [key, path] : {std::pair{"data.train", rc.train_path}, std::pair{"data.test", rc.test_path}}) {
      if (path.empty())
        r.errors.push_back(std::string(key) + " is required (path to a UCR-format file)");
      else if (!std::filesystem::is_regular_file(path))
        r.errors.push_back(std::string(key) + " does not name a readable file: " + path.string());
    }
  }
  rc.input_length = r.size("data.input_length", 1);
  const std::string normal = lower(r.raw("data.normal_label"));
  if (normal != "auto") {
    int label = 0;
    const auto [ptr, ec] = std::from_chars(normal.data(), normal.data() + normal.size(), label);
    if (ec != std::errc() || ptr != normal.data() + normal.size())
      r.errors.push_back("data.normal_label must be an integer or 'auto' (got '" + r.raw("data.normal_label") + "')");
    else
      rc.base.normal_label = label;
  }

  models::ModelSpec& m = rc.base.model;
  m.family = rc.family;
  m.input_length = rc.input_length;
  m.latent_dim = r.size("model.latent_dim", 1);
  rc.hidden_set = !trim(r.raw("model.hidden")).empty();
  rc.channels_set = !trim(r.raw("model.channels")).empty();
  m.hidden = r.sizes("model.hidden");
  m.channels = r.sizes("model.channels");
  m.kernel = r.size("model.kernel", 1);
  m.stride = r.size("model.stride", 1);
  m.padding = r.size("model.padding");
  m.grid.order = static_cast<int>(r.size("model.spline_order", 1));
  m.grid.grid_size = static_cast<int>(r.size("model.grid_size", 1));
  m.grid.range_min = r.real("model.grid_min");
  m.grid.range_max = r.real("model.grid_max");
  m.batchnorm = r.boolean("model.batchnorm");
  m.dropout = r.boolean("model.dropout");
  m.dropout_rate = r.real("model.dropout_rate");
  m.variational = r.boolean("model.variational");
  m.kl_beta = r.real("model.kl_beta");

  optim::TrainConfig& t = rc.base.train;
  t.epochs = r.size("train.epochs");
  t.batch_size = r.size("train.batch_size");
  if (auto k = optim::parse_optimizer(lower(r.raw("train.optimizer"))))
    t.optimizer.kind = *k;
  else
    r.errors.push_back("train.optimizer must be adam or sgd (got '" + r.raw("train.optimizer") + "')");
  t.optimizer.lr = r.real("train.lr");
  t.optimizer.beta1 = r.real("train.beta1");
  t.optimizer.beta2 = r.real("train.beta2");
  t.optimizer.eps = r.real("train.eps");
  t.optimizer.momentum = r.real("train.momentum");
  t.sample_latent = r.boolean("train.sample_latent");
  t.smoothness = r.real("train.smoothness");

  data::Corruption& c = rc.base.corruption;
  c.noise_sigma = r.real("corruption.noise_sigma");
  c.mask_ratio = r.real("corruption.mask_ratio");
  c.mask_block = r.size("corruption.mask_block");
  rc.base.anomaly_percentile = r.real("anomaly.percentile");
  rc.base.generated_samples = r.size("generation.samples");
  rc.base.eval_batch = r.size("eval.batch_size");

  // Semantic checks for every family/task combination this config can run.
  // Fields with type errors hold fallbacks, so checks still cover the rest.
  std::vector<std::string> problems = r.errors;
  {
    std::set<std::string> seen;
    std::vector<std::pair<tasks::TaskKind, models::Family>> combos{{rc.task, rc.family}};
    for (auto tk : rc.bench_tasks)
      for (auto f : rc.bench_families)
        combos.emplace_back(tk, f);
    for (const auto& [tk, f] : combos) {
      try {
        rc.task_config(tk, f, rc.seeds.empty() ? 0 : rc.seeds.front()).validate();
      } catch (const ConfigError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line); // headline
        while (std::getline(lines, line)) {
          line = trim(line);
          if (line.rfind("- ", 0) == 0)
            line = line.substr(2);
          if (line.rfind("invalid", 0) == 0)
            continue;
          if (seen.insert(line).second)
            problems.push_back(line);
        }
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems)
      msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return rc;
}

} // namespace kanae::cli
