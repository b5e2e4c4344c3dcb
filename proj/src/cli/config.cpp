#include "pips/cli/config.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>

#include "pips/core/errors.hpp"

namespace pips {

namespace fs = std::filesystem;

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const std::int64_t n = to_int(key, v);
  if (n < 0) throw ConfigError("config key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(n);
}

const std::vector<std::string> kKeys = {
    "model.id",           "model.temperature",      "model.max_output_tokens",
    "provider.base_url",  "provider.api_key_env",   "provider.timeout_seconds",
    "provider.max_attempts", "prices.input_per_million", "prices.output_per_million",
    "synthesis.max_iterations", "limits.wall_seconds", "limits.memory_mb",
    "switch.mode",        "switch.model_path",      "baselines.pot_max_retries",
    "run.seed",           "run.concurrency",        "run.cache_mode",
    "run.cache_dir",      "run.calibration_fraction", "sandbox.interpreter",
    "sandbox.max_concurrent"};

bool is_path_key(const std::string& key) {
  return key == "switch.model_path" || key == "run.cache_dir";
}

}  // namespace

std::vector<std::string> known_config_keys() { return kKeys; }

void AppConfig::set(const std::string& key, const std::string& v) {
  try {
    if (key == "model.id") model_id = v;
    else if (key == "model.temperature") temperature = to_double(key, v);
    else if (key == "model.max_output_tokens") max_output_tokens = to_int(key, v);
    else if (key == "provider.base_url") provider_base_url = v;
    else if (key == "provider.api_key_env") api_key_env = v;
    else if (key == "provider.timeout_seconds") provider_timeout_seconds = to_double(key, v);
    else if (key == "provider.max_attempts") provider_max_attempts = static_cast<int>(to_int(key, v));
    else if (key == "prices.input_per_million") prices.usd_per_million_input = to_double(key, v);
    else if (key == "prices.output_per_million") prices.usd_per_million_output = to_double(key, v);
    else if (key == "synthesis.max_iterations") max_iterations = static_cast<int>(to_int(key, v));
    else if (key == "limits.wall_seconds") limits.wall_seconds = to_double(key, v);
    else if (key == "limits.memory_mb") limits.memory_bytes = to_int(key, v) << 20;
    else if (key == "switch.mode") switch_mode = parse_switch_mode(v);
    else if (key == "switch.model_path") switch_model_path = v;
    else if (key == "baselines.pot_max_retries") pot_max_retries = static_cast<int>(to_int(key, v));
    else if (key == "run.seed") seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "run.concurrency") concurrency = to_count(key, v);
    else if (key == "run.cache_mode") cache_mode = parse_cache_mode(v);
    else if (key == "run.cache_dir") cache_dir = v;
    else if (key == "run.calibration_fraction") calibration_fraction = to_double(key, v);
    else if (key == "sandbox.interpreter") interpreter = v;
    else if (key == "sandbox.max_concurrent") sandbox_max_concurrent = to_count(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

void AppConfig::validate() const {
  if (concurrency < 1) throw ConfigError("run.concurrency must be >= 1");
  if (sandbox_max_concurrent < 1) throw ConfigError("sandbox.max_concurrent must be >= 1");
  if (provider_max_attempts < 1) throw ConfigError("provider.max_attempts must be >= 1");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0))
    throw ConfigError("run.calibration_fraction must be in (0, 1)");
  if (switch_mode == SwitchMode::trained && switch_model_path.empty())
    throw ConfigError("switch.mode = trained needs switch.model_path");
  try {
    loop_config().validate();
    baseline_config().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

LoopConfig AppConfig::loop_config() const {
  LoopConfig c;
  c.max_iterations = max_iterations;
  c.limits = limits;
  c.model_id = model_id;
  c.temperature = temperature;
  c.max_output_tokens = max_output_tokens;
  c.prices = prices;
  return c;
}

BaselineConfig AppConfig::baseline_config() const {
  BaselineConfig c;
  c.model_id = model_id;
  c.temperature = temperature;
  c.max_output_tokens = max_output_tokens;
  c.pot_max_retries = pot_max_retries;
  c.limits = limits;
  c.prices = prices;
  return c;
}

ScorerConfig AppConfig::scorer_config() const {
  ScorerConfig c;
  c.model_id = model_id;
  c.temperature = temperature;
  return c;
}

SandboxConfig AppConfig::sandbox_config() const {
  SandboxConfig c;
  c.interpreter = {interpreter};
  c.max_concurrent = sandbox_max_concurrent;
  return c;
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  AppConfig config;
  for (const auto& item : items) {
    // Section open/close markers.
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    if (item.inputs.size() != 1)
      throw ConfigError("config key '" + key + "' expects a single value");
    std::string value = item.inputs.front();
    if (is_path_key(key) && !value.empty() && fs::path(value).is_relative())
      value = (path.parent_path() / value).lexically_normal().string();
    config.set(key, value);
  }
  return config;
}

void apply_overrides(AppConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + o + "' is not of the form key=value");
    config.set(o.substr(0, eq), o.substr(eq + 1));
  }
}

}  // namespace pips
