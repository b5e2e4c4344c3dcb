#pragma once

#include <optional>
#include <string>

#include "pips/core/types.hpp"
#include "pips/evaluator/analyzer.hpp"
#include "pips/provider/provider.hpp"
#include "pips/sandbox/sandbox.hpp"

namespace pips {

struct BaselineConfig {
  std::string model_id;
  double temperature = 0.0;
  std::optional<std::int64_t> max_output_tokens;
  int pot_max_retries = 3;
  ExecLimits limits;
  AnalyzerOptions analyzer;
  PriceSheet prices;

  void validate() const;
};

// Text after the last "FINAL ANSWER" marker: the rest of that line, or the
// next non-empty line when the marker ends its line. nullopt without a marker.
std::optional<std::string> extract_final_answer(const std::string& text);

std::string render_cot_prompt(const ReasoningInstance& instance);
std::string render_pot_prompt(const ReasoningInstance& instance);
std::string render_pot_retry_prompt(const RunOutcome& failed);

class BaselineSolver {
 public:
  BaselineSolver(Provider& provider, Executor& executor, BaselineConfig config);

  // One completion. A reply without the marker is re-prompted once; after
  // that the last non-empty line is used with a warning. Never executes code.
  SolveResult cot_solve(const ReasoningInstance& instance);

  // One completion; its last code block runs with no symbols bound.
  SolveResult pot_solve(const ReasoningInstance& instance);

  // Regenerates until a run finishes with status ok or pot_max_retries
  // attempts were made. Every attempt is a trace entry.
  SolveResult pot_retries_solve(const ReasoningInstance& instance);

  SolveResult solve(const ReasoningInstance& instance, SolveMethod method);

 private:
  SolveResult run_pot(const ReasoningInstance& instance, int max_attempts, SolveMethod method);

  Provider& provider_;
  Executor& executor_;
  BaselineConfig config_;
};

}  // namespace pips
