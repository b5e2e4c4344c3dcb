#pragma once

#include "pips/core/symbols.hpp"
#include "pips/core/types.hpp"

namespace pips {

// Timing fields (durations, wall time) are only written when include_timing is
// set, so canonical records of replayed runs compare byte-for-byte.
Json to_json(const RunOutcome& run, bool include_timing = false);
Json to_json(const IssueSet& issues);
// The run is serialized by the owning trace, not here.
Json to_json(const Feedback& feedback);
Json to_json(const IterationTrace& trace, bool include_timing = false);
Json to_json(const TokenUsage& usage);
Json to_json(const AnswerValue& value);
Json to_json(const SolveResult& result, bool include_trace = true, bool include_timing = false);

RunOutcome run_outcome_from_json(const Json& j);
IssueSet issue_set_from_json(const Json& j);
TokenUsage token_usage_from_json(const Json& j);

}  // namespace pips
