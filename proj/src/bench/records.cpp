#include "pips/bench/records.hpp"

#include <sstream>

#include "pips/core/errors.hpp"
#include "pips/core/serialize.hpp"

namespace pips {

namespace fs = std::filesystem;

std::string_view to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::pips: return "pips";
    case BenchMethod::pips_no_switch: return "pips_no_switch";
    case BenchMethod::cot: return "cot";
    case BenchMethod::pot: return "pot";
    case BenchMethod::pot_retries: return "pot_retries";
  }
  return "?";
}

BenchMethod parse_bench_method(std::string_view name) {
  for (auto m : {BenchMethod::pips, BenchMethod::pips_no_switch, BenchMethod::cot, BenchMethod::pot,
                 BenchMethod::pot_retries}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected pips, pips_no_switch, cot, pot or pot_retries)");
}

Json to_json(const RunRecord& r) {
  Json j = {
      {"instance_id", r.instance_id},
      {"task", r.task},
      {"method", r.method},
      {"split", r.split},
      {"final_answer", r.final_answer ? Json(*r.final_answer) : Json()},
      {"correct", r.correct ? Json(*r.correct) : Json()},
      {"well_formed", r.well_formed},
      {"non_trivial", r.non_trivial},
      {"attempted_code", r.attempted_code},
      {"issues", to_json(r.issues)},
      {"usage", to_json(r.usage)},
      {"cost_usd", r.cost_usd},
      {"iterations", r.iterations},
      {"warnings", r.warnings},
      {"error", r.error},
  };
  if (r.switch_info) {
    j["switch"] = {{"criteria", r.switch_info->criteria},
                   {"probability", r.switch_info->probability},
                   {"routed_to", r.switch_info->routed_to},
                   {"mode", r.switch_info->mode}};
  }
  if (r.criteria) j["criteria"] = *r.criteria;
  if (r.trace) j["trace"] = *r.trace;
  return j;
}

RunRecord run_record_from_json(const Json& j) {
  try {
    RunRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.split = j.value("split", "");
    if (j.contains("final_answer") && !j.at("final_answer").is_null())
      r.final_answer = j.at("final_answer").get<std::string>();
    if (j.contains("correct") && !j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
    r.well_formed = j.value("well_formed", false);
    r.non_trivial = j.value("non_trivial", false);
    r.attempted_code = j.value("attempted_code", false);
    if (j.contains("issues")) r.issues = issue_set_from_json(j.at("issues"));
    if (j.contains("usage")) r.usage = token_usage_from_json(j.at("usage"));
    r.cost_usd = j.value("cost_usd", 0.0);
    r.iterations = j.value("iterations", 0);
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.error = j.value("error", "");
    if (j.contains("switch")) {
      const Json& s = j.at("switch");
      r.switch_info = SwitchInfo{s.at("criteria").get<std::vector<double>>(),
                                 s.at("probability").get<double>(),
                                 s.at("routed_to").get<std::string>(), s.value("mode", "")};
    }
    if (j.contains("criteria")) r.criteria = j.at("criteria").get<std::vector<double>>();
    if (j.contains("trace")) r.trace = j.at("trace");
    return r;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("bad run record: ") + e.what());
  }
}

namespace {

std::vector<RunRecord> read_records(const fs::path& path, bool repair) {
  std::vector<RunRecord> out;
  if (!fs::exists(path)) return out;
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read results " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    content = buf.str();
  }
  std::size_t complete = content.rfind('\n');
  complete = complete == std::string::npos ? 0 : complete + 1;
  if (repair && complete < content.size()) fs::resize_file(path, complete);

  std::size_t pos = 0;
  int lineno = 0;
  while (pos < complete) {
    std::size_t eol = content.find('\n', pos);
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(run_record_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("invalid JSON in results: ") + e.what(), lineno);
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), lineno);
    }
  }
  return out;
}

}  // namespace

std::vector<RunRecord> load_records(const fs::path& path) { return read_records(path, false); }

std::vector<RunRecord> load_records_for_resume(const fs::path& path) {
  auto records = read_records(path, true);
  fs::path timing = timing_path_for(path);
  if (fs::exists(timing)) {
    std::ifstream in(timing, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    const std::size_t eol = content.rfind('\n');
    const std::size_t complete = eol == std::string::npos ? 0 : eol + 1;
    if (complete < content.size()) fs::resize_file(timing, complete);
  }
  return records;
}

fs::path timing_path_for(const fs::path& results) {
  fs::path p = results;
  p += ".timing.jsonl";
  return p;
}

ResultsAppender::ResultsAppender(const fs::path& path)
    : results_(path, std::ios::app | std::ios::binary),
      timing_(timing_path_for(path), std::ios::app | std::ios::binary) {
  if (!results_ || !timing_) throw Error("cannot open results file " + path.string() + " for append");
}

void ResultsAppender::append(const RunRecord& record) {
  const std::string line = canonical_dump(to_json(record)) + "\n";
  const Json t = {{"instance_id", record.instance_id},
                  {"method", record.method},
                  {"wall_seconds", record.wall_seconds}};
  std::lock_guard lock(mutex_);
  results_ << line;
  results_.flush();
  timing_ << canonical_dump(t) << '\n';
  timing_.flush();
  if (!results_ || !timing_) throw Error("write to results file failed");
}

}  // namespace pips
