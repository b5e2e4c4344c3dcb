#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pips/core/symbols.hpp"
#include "pips/core/types.hpp"

namespace pips {

enum class BenchMethod { pips, pips_no_switch, cot, pot, pot_retries };
std::string_view to_string(BenchMethod method);
BenchMethod parse_bench_method(std::string_view name);

struct SwitchInfo {
  std::vector<double> criteria;
  double probability = 0.5;
  std::string routed_to;  // "synthesis" or "cot"
  std::string mode;       // "zero_shot" or "trained"
};

struct RunRecord {
  std::string instance_id;
  std::string task;
  std::string method;
  std::string split;
  std::optional<std::string> final_answer;  // canonical text
  std::optional<bool> correct;              // set iff a gold answer exists
  bool well_formed = false;
  bool non_trivial = false;
  bool attempted_code = false;
  IssueSet issues;
  TokenUsage usage;
  double cost_usd = 0.0;
  double wall_seconds = 0.0;  // not part of the canonical form
  int iterations = 0;
  std::optional<SwitchInfo> switch_info;
  // Criteria scored for switch training even when no switch was used.
  std::optional<std::vector<double>> criteria;
  std::vector<std::string> warnings;
  std::string error;  // non-empty when the instance failed
  std::optional<Json> trace;

  std::pair<std::string, std::string> key() const { return {instance_id, method}; }
};

// Canonical form: sorted keys, no timing. Two replayed runs serialize equally.
Json to_json(const RunRecord& record);
RunRecord run_record_from_json(const Json& doc);

// Reads a results JSONL file. A final line without its newline is the trace
// of an interrupted write and is ignored. Throws SchemaError (with the line)
// on any other malformed line. A missing file reads as empty.
std::vector<RunRecord> load_records(const std::filesystem::path& path);

// Same as load_records, and additionally truncates an unterminated final
// line so that appends start on a fresh line.
std::vector<RunRecord> load_records_for_resume(const std::filesystem::path& path);

// "<results>.timing.jsonl" next to the results file.
std::filesystem::path timing_path_for(const std::filesystem::path& results);

// Single appender for results and their timing sidecar. Each write is one
// flushed line. Thread-safe.
class ResultsAppender {
 public:
  explicit ResultsAppender(const std::filesystem::path& path);
  void append(const RunRecord& record);

 private:
  std::mutex mutex_;
  std::ofstream results_;
  std::ofstream timing_;
};

}  // namespace pips
