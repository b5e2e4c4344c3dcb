#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pips/core/types.hpp"

namespace pips {

struct SyntaxDiagnostic {
  int line = 0;
  std::string message;
};

struct AnalyzerOptions {
  // Top-level module names whose import counts as raw media processing.
  std::vector<std::string> media_deny_list = {"cv2", "PIL"};
};

// First parser diagnostic, or a missing/async top-level entry definition.
std::optional<SyntaxDiagnostic> check_syntax(const ProgramArtifact& program);

// Constant propagation over the entry function. With parameters, true iff
// every return value is independent of the parameters and of any branch or
// loop that reads them. Without parameters (input-free programs), true iff
// every return yields a literal with no computation applied. Returns false
// whenever the analysis cannot follow the code.
bool detect_trivial(const ProgramArtifact& program);

// TODO/FIXME markers in comments or docstrings, "placeholder" in a comment,
// a bare `...` statement, `raise NotImplementedError`, or a function body
// that does nothing (pass, `...`, or only a docstring).
bool detect_placeholders(const ProgramArtifact& program);

// Any top-level statement other than an import, a def/class, a constant
// assignment, a docstring or pass.
bool detect_example_usage(const ProgramArtifact& program);

bool detect_raw_media(const ProgramArtifact& program, const std::vector<std::string>& deny_list);

struct ReturnCheck {
  bool wrong_return_type = false;
  bool returns_null = false;
};

// null is admitted only for free_text specs and for multiple choice specs
// with an option that normalizes to "none"; the gold answer is never
// consulted. Only meaningful for status ok.
ReturnCheck check_return(const RunOutcome& run, const AnswerSpec& spec);

IssueSet analyze(const ProgramArtifact& program, const RunOutcome& run, const AnswerSpec& spec,
                 const AnalyzerOptions& options = {});

bool is_well_formed(const IssueSet& issues, const RunOutcome& run);
bool is_non_trivial(const IssueSet& issues, const RunOutcome& run);

enum class IssueCategory { syntax, placeholder, type, trivial };

// Reporting precedence: syntax > placeholder > type > trivial.
std::optional<IssueCategory> primary_category(const IssueSet& issues);
std::string_view to_string(IssueCategory category);

}  // namespace pips
