#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pips/core/errors.hpp"
#include "pips/core/types.hpp"
#include "pips/evaluator/analyzer.hpp"
#include "pips/provider/provider.hpp"
#include "pips/sandbox/sandbox.hpp"

namespace pips {

struct LoopConfig {
  int max_iterations = 30;
  ExecLimits limits;
  std::string model_id;
  double temperature = 0.0;
  std::optional<std::int64_t> max_output_tokens;
  AnalyzerOptions analyzer;
  PriceSheet prices;

  void validate() const;
};

// A solve that hit a provider or sandbox failure. partial holds the trace so far.
class SolveAborted : public Error {
 public:
  SolveAborted(const std::string& what, SolveResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

struct InitialGeneration {
  SymbolStore symbols;
  ProgramArtifact program;
  std::string response_text;
  TokenUsage usage;
  std::vector<std::string> warnings;
};

struct RefineOutcome {
  bool finished = false;
  std::optional<SymbolStore> symbols;
  std::optional<ProgramArtifact> program;
  std::string response_text;
  TokenUsage usage;
  std::vector<std::string> warnings;

  // revised_program, revised_symbols or revised_both; finished when finished.
  TraceAction action() const;
};

// Refinement prompt for one evaluated iteration.
std::string render_refine_prompt(const IterationTrace& trace);

// True when the reply, ignoring whitespace, backticks, quotes, emphasis and a
// trailing period, is exactly FINISHED.
bool is_finished_reply(const std::string& text);

class SynthesisEngine {
 public:
  SynthesisEngine(Provider& provider, Executor& executor, LoopConfig config);

  const LoopConfig& config() const { return config_; }

  // System message: the initial generator prompt. User message: the question
  // and its image attachments.
  ModelRequest initial_request(const ReasoningInstance& instance) const;

  // The initial conversation followed by, for every iteration so far, the
  // model reply as an assistant turn and its refinement prompt as a user turn.
  ModelRequest refine_request(const ReasoningInstance& instance,
                              const std::vector<IterationTrace>& history) const;

  // Throws MissingBlock when the reply lacks a JSON or a code block (or the
  // JSON does not parse) after one re-prompt.
  InitialGeneration generate_initial(const ReasoningInstance& instance);

  RefineOutcome refine_step(const ReasoningInstance& instance,
                            const std::vector<IterationTrace>& history);

  // Runs the program, analyzes it and, when judged, asks the evaluator model.
  void evaluate(const ReasoningInstance& instance, IterationTrace& trace, bool with_judge);

  SolveResult run_loop(const ReasoningInstance& instance);

 private:
  ModelResponse call(const ModelRequest& request);

  Provider& provider_;
  Executor& executor_;
  LoopConfig config_;
};

// Fills final_answer, well_formed, non_trivial and final_issues from one
// evaluated program.
void settle_answer(SolveResult& result, const RunOutcome& run, const IssueSet& issues,
                   const AnswerSpec& spec);

}  // namespace pips
