#include "bfn/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfn/schedule.hpp"

namespace bfn {

namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"modality", "continuous"},
      {"dim", "1"},
      {"classes", "0"},
      {"schedule", "none"},
      {"sigma1", "0.001"},
      {"beta1", "3"},
      {"t_min", "1e-6"},
      {"noise_sigma", "0"},
      {"predictor", "mlp"},
      {"hidden", "256,256"},
      {"activation", "silu"},
      {"fourier_pairs", "8"},
      {"init_scale", "0.1"},
      {"batch_size", "64"},
      {"steps", "1000"},
      {"learning_rate", "1e-4"},
      {"weight_decay", "0.01"},
      {"adam_beta1", "0.9"},
      {"adam_beta2", "0.98"},
      {"adam_eps", "1e-8"},
      {"ema_decay", "0.9999"},
      {"seed", "0"},
      {"eval_every", "100"},
      {"eval_passes", "4"},
      {"dataset", ""},
      {"checkpoint", "model.ckpt"},
      {"history", ""},
  };
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DomainError("config: " + key + " = '" + v + "' is not a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw DomainError("config: " + key + " = '" + v + "' is not an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw DomainError("config: " + key + " = '" + v + "' is not an unsigned integer");
  return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : defaults()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw DomainError("override '" + std::string(assignment) + "' must look like key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw DomainError("config: unknown key '" + key + "'");
  values_[key] = value;
  explicit_[key] = true;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw DomainError("config: unknown key '" + key + "'");
  return it->second;
}

bool RunConfig::is_set(const std::string& key) const { return explicit_.count(key) > 0; }

std::pair<double, double> RunConfig::resolved_schedule() const {
  const std::string& preset = get("schedule");
  double sigma1 = to_double("sigma1", get("sigma1"));
  double beta1 = to_double("beta1", get("beta1"));
  if (preset == "bins256") {
    if (!is_set("sigma1")) sigma1 = presets::kSigma1Bins256;
  } else if (preset == "bins16") {
    if (!is_set("sigma1")) sigma1 = presets::kSigma1Bins16;
  } else if (preset == "binary") {
    if (!is_set("beta1")) beta1 = presets::kBeta1Binary;
  } else if (preset == "text") {
    if (!is_set("beta1")) beta1 = presets::kBeta1Text;
  } else if (preset != "none") {
    throw DomainError("config: unknown schedule preset '" + preset + "'");
  }
  return {sigma1, beta1};
}

std::string RunConfig::snapshot() const {
  auto vals = values_;
  const auto [sigma1, beta1] = resolved_schedule();
  char buf[64];
  if (!is_set("sigma1")) {
    std::snprintf(buf, sizeof buf, "%.17g", sigma1);
    vals["sigma1"] = buf;
  }
  if (!is_set("beta1")) {
    std::snprintf(buf, sizeof buf, "%.17g", beta1);
    vals["beta1"] = buf;
  }
  std::string out;
  for (const auto& [k, v] : vals) out += k + "=" + v + "\n";
  return out;
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.modality = modality_from_string(get("modality"));
  const long long dim = to_int("dim", get("dim"));
  if (dim < 1) throw DomainError("config: dim must be positive");
  m.dim = static_cast<std::size_t>(dim);
  m.classes = static_cast<int>(to_int("classes", get("classes")));
  m.t_min = to_double("t_min", get("t_min"));
  m.noise_sigma = to_double("noise_sigma", get("noise_sigma"));

  const auto [sigma1, beta1] = resolved_schedule();
  m.sigma1 = sigma1;
  m.beta1 = beta1;
  m.validate();
  return m;
}

PredictorSpec RunConfig::predictor_spec() const {
  const ModelConfig m = model();
  PredictorSpec s;
  s.modality = m.modality;
  s.dim = m.dim;
  s.classes = m.classes;
  s.activation = activation_from_string(get("activation"));
  s.time.fourier_pairs = static_cast<int>(to_int("fourier_pairs", get("fourier_pairs")));
  s.hidden.clear();
  std::stringstream ss(get("hidden"));
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const long long h = to_int("hidden", part);
    if (h < 1) throw DomainError("config: hidden widths must be positive");
    s.hidden.push_back(static_cast<std::size_t>(h));
  }
  s.validate();
  return s;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.batch_size = static_cast<int>(to_int("batch_size", get("batch_size")));
  t.steps = static_cast<int>(to_int("steps", get("steps")));
  t.learning_rate = to_double("learning_rate", get("learning_rate"));
  t.weight_decay = to_double("weight_decay", get("weight_decay"));
  t.adam_beta1 = to_double("adam_beta1", get("adam_beta1"));
  t.adam_beta2 = to_double("adam_beta2", get("adam_beta2"));
  t.adam_eps = to_double("adam_eps", get("adam_eps"));
  t.ema_decay = to_double("ema_decay", get("ema_decay"));
  t.seed = to_u64("seed", get("seed"));
  t.eval_every = static_cast<int>(to_int("eval_every", get("eval_every")));
  t.eval_passes = static_cast<int>(to_int("eval_passes", get("eval_passes")));
  t.init_scale = to_double("init_scale", get("init_scale"));
  t.validate();
  return t;
}

}  // namespace bfn
