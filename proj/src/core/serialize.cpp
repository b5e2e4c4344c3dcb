#include "pips/core/serialize.hpp"

#include "pips/core/errors.hpp"

namespace pips {

Json to_json(const RunOutcome& run, bool include_timing) {
  Json j = {
      {"status", std::string(to_string(run.status))},
      {"return", run.return_value ? *run.return_value : Json()},
      {"stdout", run.stdout_text},
      {"exc", run.exception_text},
  };
  if (include_timing) j["duration"] = run.duration_seconds;
  return j;
}

Json to_json(const IssueSet& issues) {
  return {
      {"syntax_error", issues.syntax_error},
      {"trivial", issues.trivial},
      {"placeholder", issues.placeholder},
      {"example_usage", issues.example_usage},
      {"wrong_return_type", issues.wrong_return_type},
      {"returns_null", issues.returns_null},
      {"raw_media_processing", issues.raw_media_processing},
      {"messages", issues.messages},
  };
}

Json to_json(const Feedback& feedback) {
  return {
      {"issues", to_json(feedback.issues)},
      {"judge_summary", feedback.judge_summary},
      {"symbol_issues", feedback.symbol_issues},
      {"program_issues", feedback.program_issues},
  };
}

Json to_json(const IterationTrace& trace, bool include_timing) {
  return {
      {"index", trace.index},
      {"symbols", trace.symbols.root()},
      {"program", trace.program.source},
      {"run", to_json(trace.run, include_timing)},
      {"feedback", to_json(trace.feedback)},
      {"action", std::string(to_string(trace.action))},
      {"response", trace.response_text},
      {"usage", to_json(trace.usage)},
      {"warnings", trace.warnings},
  };
}

Json to_json(const TokenUsage& usage) {
  return {{"input_tokens", usage.input_tokens}, {"output_tokens", usage.output_tokens}};
}

Json to_json(const AnswerValue& value) {
  Json raw = std::visit([](const auto& v) { return Json(v); }, value.value);
  return {{"value", raw}, {"canonical", value.canonical_text}};
}

Json to_json(const SolveResult& result, bool include_trace, bool include_timing) {
  Json j = {
      {"method", std::string(to_string(result.method))},
      {"final_answer", result.final_answer ? to_json(*result.final_answer) : Json()},
      {"usage", to_json(result.usage)},
      {"cost_usd", result.cost_usd},
      {"well_formed", result.well_formed},
      {"non_trivial", result.non_trivial},
      {"attempted_code", result.attempted_code},
      {"issues", to_json(result.final_issues)},
      {"iterations", result.trace.size()},
      {"warnings", result.warnings},
  };
  if (include_trace) {
    Json traces = Json::array();
    for (const auto& t : result.trace) traces.push_back(to_json(t, include_timing));
    j["trace"] = std::move(traces);
  }
  if (include_timing) j["wall_seconds"] = result.wall_seconds;
  return j;
}

RunOutcome run_outcome_from_json(const Json& j) {
  try {
    RunOutcome run;
    run.status = parse_run_status(j.at("status").get<std::string>());
    if (run.status == RunStatus::ok) run.return_value = j.contains("return") ? j.at("return") : Json();
    run.stdout_text = j.value("stdout", "");
    run.exception_text = j.value("exc", "");
    run.duration_seconds = j.value("duration", 0.0);
    return run;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad run outcome: ") + e.what());
  }
}

IssueSet issue_set_from_json(const Json& j) {
  try {
    IssueSet s;
    s.syntax_error = j.value("syntax_error", false);
    s.trivial = j.value("trivial", false);
    s.placeholder = j.value("placeholder", false);
    s.example_usage = j.value("example_usage", false);
    s.wrong_return_type = j.value("wrong_return_type", false);
    s.returns_null = j.value("returns_null", false);
    s.raw_media_processing = j.value("raw_media_processing", false);
    s.messages = j.value("messages", std::vector<std::string>{});
    return s;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad issue set: ") + e.what());
  }
}

TokenUsage token_usage_from_json(const Json& j) {
  try {
    return {j.value("input_tokens", std::int64_t{0}), j.value("output_tokens", std::int64_t{0})};
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad token usage: ") + e.what());
  }
}

}  // namespace pips
