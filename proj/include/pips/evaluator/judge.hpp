#pragma once

#include <string>
#include <vector>

#include "pips/core/types.hpp"
#include "pips/evaluator/analyzer.hpp"
#include "pips/provider/provider.hpp"

namespace pips {

struct JudgeVerdict {
  std::string summary;
  std::vector<std::string> symbol_issues;
  std::vector<std::string> program_issues;
  TokenUsage usage;
};

// Slot values shared by the judge and refinement prompts.
std::string render_return_value(const RunOutcome& run);

// The evaluator template with {json_str, code_str, output, stdout, err} filled.
std::string render_judge_prompt(const SymbolStore& symbols, const ProgramArtifact& program,
                                const RunOutcome& run);

// System message: the rendered evaluator prompt. User message: the question
// text followed by any image attachments.
ModelRequest build_judge_request(const ReasoningInstance& instance, const SymbolStore& symbols,
                                 const ProgramArtifact& program, const RunOutcome& run,
                                 const std::string& model_id, double temperature = 0.0);

// Splits judge text into findings. Lines under a heading that names the
// symbols go to symbol_issues; everything else goes to program_issues. A
// reply saying there are no issues yields two empty lists.
void split_judge_findings(const std::string& text, std::vector<std::string>& symbol_issues,
                          std::vector<std::string>& program_issues);

bool is_no_issue_reply(const std::string& text);

JudgeVerdict judge(Provider& provider, const ReasoningInstance& instance, const SymbolStore& symbols,
                   const ProgramArtifact& program, const RunOutcome& run, const std::string& model_id,
                   double temperature = 0.0);

// Reads every attachment into an image part. Throws Error when a file cannot
// be read.
std::vector<ContentPart> attachment_parts(const ReasoningInstance& instance);

// Analyzer messages followed by the judge summary: the text handed back to the
// generator as checker output.
std::string feedback_text(const Feedback& feedback);

// Deterministic analysis of many (program, run) pairs. The parallel version
// uses OpenMP over items; the serial one is the reference.
std::vector<IssueSet> analyze_batch(const std::vector<ProgramArtifact>& programs,
                                    const std::vector<RunOutcome>& runs, const AnswerSpec& spec,
                                    const AnalyzerOptions& options = {});
std::vector<IssueSet> analyze_batch_serial(const std::vector<ProgramArtifact>& programs,
                                           const std::vector<RunOutcome>& runs,
                                           const AnswerSpec& spec,
                                           const AnalyzerOptions& options = {});

}  // namespace pips
