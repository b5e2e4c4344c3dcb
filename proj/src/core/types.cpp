#include "pips/core/types.hpp"

#include <set>

#include "pips/core/errors.hpp"

namespace pips {

void AnswerSpec::validate() const {
  if (numeric_rel_tol < 0.0) throw DomainError("numeric_rel_tol must be >= 0");
  if (kind == AnswerKind::multiple_choice) {
    std::set<std::string> distinct(options.begin(), options.end());
    if (distinct.size() < 2 || distinct.size() != options.size())
      throw DomainError("multiple_choice needs at least two distinct options");
  } else if (!options.empty()) {
    throw DomainError("options are only allowed for multiple_choice answers");
  }
}

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::free_text: return "free_text";
    case AnswerKind::integer: return "integer";
    case AnswerKind::decimal: return "decimal";
    case AnswerKind::multiple_choice: return "multiple_choice";
    case AnswerKind::boolean: return "boolean";
  }
  return "free_text";
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::unassigned: return "unassigned";
    case SplitTag::calibration: return "calibration";
    case SplitTag::evaluation: return "evaluation";
  }
  return "unassigned";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::ok: return "ok";
    case RunStatus::exception: return "exception";
    case RunStatus::timeout: return "timeout";
    case RunStatus::resource_exhausted: return "resource_exhausted";
    case RunStatus::harness_error: return "harness_error";
  }
  return "harness_error";
}

std::string_view to_string(TraceAction action) {
  switch (action) {
    case TraceAction::initial: return "initial";
    case TraceAction::revised_program: return "revised_program";
    case TraceAction::revised_symbols: return "revised_symbols";
    case TraceAction::revised_both: return "revised_both";
    case TraceAction::finished: return "finished";
    case TraceAction::exhausted: return "exhausted";
  }
  return "initial";
}

std::string_view to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::synthesis: return "synthesis";
    case SolveMethod::cot: return "cot";
    case SolveMethod::pot: return "pot";
    case SolveMethod::pot_retries: return "pot_retries";
  }
  return "cot";
}

AnswerKind parse_answer_kind(std::string_view name) {
  for (auto kind : {AnswerKind::free_text, AnswerKind::integer, AnswerKind::decimal,
                    AnswerKind::multiple_choice, AnswerKind::boolean}) {
    if (to_string(kind) == name) return kind;
  }
  throw SchemaError("unknown answer_kind '" + std::string(name) + "'");
}

SplitTag parse_split_tag(std::string_view name) {
  for (auto tag : {SplitTag::unassigned, SplitTag::calibration, SplitTag::evaluation}) {
    if (to_string(tag) == name) return tag;
  }
  throw SchemaError("unknown split tag '" + std::string(name) + "'");
}

RunStatus parse_run_status(std::string_view name) {
  for (auto s : {RunStatus::ok, RunStatus::exception, RunStatus::timeout,
                 RunStatus::resource_exhausted, RunStatus::harness_error}) {
    if (to_string(s) == name) return s;
  }
  throw SchemaError("unknown run status '" + std::string(name) + "'");
}

}  // namespace pips
