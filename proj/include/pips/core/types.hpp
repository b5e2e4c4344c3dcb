#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pips/core/symbols.hpp"

namespace pips {

enum class AnswerKind { free_text, integer, decimal, multiple_choice, boolean };

struct AnswerSpec {
  AnswerKind kind = AnswerKind::free_text;
  // Option texts, labelled A, B, C, ... by position. Required iff multiple_choice.
  std::vector<std::string> options;
  double numeric_rel_tol = 1e-6;

  // Throws DomainError when the invariants do not hold.
  void validate() const;
  bool is_numeric() const { return kind == AnswerKind::integer || kind == AnswerKind::decimal; }
};

// A normalized answer. canonical_text is a pure function of (value, spec).
struct AnswerValue {
  std::variant<std::string, double, bool> value;
  std::string canonical_text;

  bool is_number() const { return std::holds_alternative<double>(value); }
};

struct MediaRef {
  std::filesystem::path path;
  std::string media_type;  // "image/png", "image/jpeg", ...
};

enum class SplitTag { unassigned, calibration, evaluation };

struct ReasoningInstance {
  std::string id;
  std::string task_name;
  std::string query_text;
  std::vector<MediaRef> attachments;
  AnswerSpec answer_spec;
  std::optional<AnswerValue> gold_answer;
  SplitTag split_tag = SplitTag::unassigned;
};

struct ProgramArtifact {
  std::string source;
  std::string entry_name = "solve";
  int origin_iteration = 0;
};

struct TokenUsage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    return *this;
  }
  friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

enum class RunStatus { ok, exception, timeout, resource_exhausted, harness_error };

struct RunOutcome {
  RunStatus status = RunStatus::harness_error;
  std::optional<Json> return_value;  // present iff status == ok
  std::string stdout_text;
  std::string exception_text;
  double duration_seconds = 0.0;
};

// Deterministic analyzer verdicts for one program.
struct IssueSet {
  bool syntax_error = false;
  bool trivial = false;
  bool placeholder = false;
  bool example_usage = false;
  bool wrong_return_type = false;
  bool returns_null = false;
  bool raw_media_processing = false;
  std::vector<std::string> messages;

  bool any() const {
    return syntax_error || trivial || placeholder || example_usage || wrong_return_type ||
           returns_null || raw_media_processing;
  }
};

struct Feedback {
  IssueSet issues;
  RunOutcome run;
  std::string judge_summary;
  std::vector<std::string> symbol_issues;
  std::vector<std::string> program_issues;
};

enum class TraceAction { initial, revised_program, revised_symbols, revised_both, finished, exhausted };

struct IterationTrace {
  int index = 0;
  SymbolStore symbols;
  ProgramArtifact program;
  RunOutcome run;
  Feedback feedback;
  TraceAction action = TraceAction::initial;
  // Model reply that produced this iteration's symbols and program.
  std::string response_text;
  // Usage of every model call attributed to this iteration.
  TokenUsage usage;
  std::vector<std::string> warnings;
};

enum class SolveMethod { synthesis, cot, pot, pot_retries };

struct SolveResult {
  SolveMethod method = SolveMethod::cot;
  std::optional<AnswerValue> final_answer;
  std::vector<IterationTrace> trace;
  TokenUsage usage;
  double cost_usd = 0.0;
  bool well_formed = false;
  bool non_trivial = false;
  // True when at least one program was produced and analyzed.
  bool attempted_code = false;
  IssueSet final_issues;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

std::string_view to_string(AnswerKind kind);
std::string_view to_string(SplitTag tag);
std::string_view to_string(RunStatus status);
std::string_view to_string(TraceAction action);
std::string_view to_string(SolveMethod method);

// Throw SchemaError on unknown names.
AnswerKind parse_answer_kind(std::string_view name);
SplitTag parse_split_tag(std::string_view name);
RunStatus parse_run_status(std::string_view name);

}  // namespace pips
