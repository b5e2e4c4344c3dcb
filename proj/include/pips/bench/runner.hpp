#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "pips/baselines/baselines.hpp"
#include "pips/bench/dataset.hpp"
#include "pips/bench/records.hpp"
#include "pips/switch/switch.hpp"
#include "pips/synthesis/synthesis.hpp"

namespace pips {

enum class SplitSelection { evaluation, calibration, all };
std::string_view to_string(SplitSelection selection);
SplitSelection parse_split_selection(std::string_view name);

enum class SwitchMode { zero_shot, trained };
std::string_view to_string(SwitchMode mode);
SwitchMode parse_switch_mode(std::string_view name);

struct BenchOptions {
  BenchMethod method = BenchMethod::pips;
  SplitSelection split = SplitSelection::evaluation;
  std::size_t concurrency = 8;
  SwitchMode switch_mode = SwitchMode::zero_shot;
  std::optional<LogisticModel> switch_model;  // required for SwitchMode::trained
  // Score the criteria vector for every instance, whatever the method, so the
  // records can later train a switch.
  bool record_criteria = false;
  bool include_trace = false;
  // Stop claiming new instances after this many records were produced.
  std::optional<std::size_t> stop_after;
  LoopConfig loop;
  BaselineConfig baseline;
  ScorerConfig scorer;

  void validate() const;
};

struct BenchSummary {
  std::size_t selected = 0;  // instances in the chosen split
  std::size_t skipped = 0;   // already present in the results file
  std::size_t produced = 0;
  std::size_t failed = 0;  // produced records carrying an error
};

// Runs `options.method` over every selected instance that has no record yet
// for this method in `results_path`, appending one record per instance.
// Records are appended in dataset order whatever the completion order, so
// replayed runs produce identical files. Instance failures are recorded,
// never thrown.
BenchSummary run_benchmark(const std::vector<Dataset>& datasets, Provider& provider,
                           Executor& executor, const BenchOptions& options,
                           const std::filesystem::path& results_path);

// Solves one instance and converts the outcome into a record. Never throws
// for instance-level failures.
RunRecord solve_instance(const ReasoningInstance& instance, Provider& provider, Executor& executor,
                         const BenchOptions& options);

}  // namespace pips
