#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pips/baselines/baselines.hpp"
#include "pips/bench/runner.hpp"
#include "pips/provider/provider.hpp"
#include "pips/sandbox/sandbox.hpp"
#include "pips/switch/switch.hpp"
#include "pips/synthesis/synthesis.hpp"

namespace pips {

// Settings shared by every subcommand. Keys are "section.name":
//
//   model.id  model.temperature  model.max_output_tokens
//   provider.base_url  provider.api_key_env  provider.timeout_seconds  provider.max_attempts
//   prices.input_per_million  prices.output_per_million
//   synthesis.max_iterations
//   limits.wall_seconds  limits.memory_mb
//   switch.mode  switch.model_path
//   baselines.pot_max_retries
//   run.seed  run.concurrency  run.cache_mode  run.cache_dir  run.calibration_fraction
//   sandbox.interpreter  sandbox.max_concurrent
struct AppConfig {
  std::string model_id;
  double temperature = 0.0;
  std::optional<std::int64_t> max_output_tokens;

  std::string provider_base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  double provider_timeout_seconds = 120.0;
  int provider_max_attempts = 5;

  PriceSheet prices;
  int max_iterations = 30;
  ExecLimits limits;
  SwitchMode switch_mode = SwitchMode::zero_shot;
  std::filesystem::path switch_model_path;
  int pot_max_retries = 3;

  std::uint64_t seed = 0;
  std::size_t concurrency = 8;
  CacheMode cache_mode = CacheMode::record;
  std::filesystem::path cache_dir = "cache";
  double calibration_fraction = 0.2;

  std::string interpreter = "python3";
  std::size_t sandbox_max_concurrent = 4;

  // Throws ConfigError on unknown keys or unparseable values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  LoopConfig loop_config() const;
  BaselineConfig baseline_config() const;
  ScorerConfig scorer_config() const;
  SandboxConfig sandbox_config() const;
};

std::vector<std::string> known_config_keys();

// TOML-style file: [section] headers, key = value, # comments. Relative
// paths in the file are resolved against the file's directory.
AppConfig load_config(const std::filesystem::path& path);

// "key=value" overrides, applied in order after the file.
void apply_overrides(AppConfig& config, const std::vector<std::string>& overrides);

}  // namespace pips
