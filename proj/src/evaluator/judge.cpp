#include "pips/evaluator/judge.hpp"

#include <algorithm>
#include <exception>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "pips/core/errors.hpp"
#include "pips/core/prompts.hpp"

namespace pips {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Letters, digits and single spaces only.
std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (!out.empty() && out.back() != ' ') {
      out.push_back(' ');
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Length of a leading list marker ("- ", "* ", "1. ", "2) "), or 0.
std::size_t list_marker(std::string_view line) {
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') && line[1] == ' ') {
    return 2;
  }
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
    return i + 2;
  }
  return 0;
}

std::string strip_emphasis(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_')) s.erase(0, 1);
  while (!s.empty() && (s.back() == '*' || s.back() == '_')) s.pop_back();
  return trim(s);
}

enum class Section { none, symbols, program };

// A heading label is built only from section vocabulary ("Issues with the
// extracted symbols", "Code issues", "JSON"), so ordinary findings that mention
// symbols are never mistaken for headings.
std::optional<Section> heading_section(std::string_view label) {
  static const std::set<std::string, std::less<>> kVocabulary = {
      "issue", "issues", "problem", "problems", "finding", "findings", "with", "the", "in",
      "of", "for", "regarding", "related", "to", "extracted", "input", "python", "symbol",
      "symbols", "json", "code", "program", "solution", "and", "a", "potential", "other",
      "main", "summary"};
  std::istringstream words(squash(label));
  std::string w;
  bool symbols = false, program = false, any = false;
  while (words >> w) {
    if (!kVocabulary.count(w) && !std::all_of(w.begin(), w.end(), ::isdigit)) return std::nullopt;
    any = true;
    symbols = symbols || w == "symbol" || w == "symbols" || w == "json";
    program = program || w == "code" || w == "program" || w == "solution";
  }
  if (!any) return std::nullopt;
  if (symbols && !program) return Section::symbols;
  if (program && !symbols) return Section::program;
  return std::nullopt;
}

bool is_empty_finding(const std::string& text) {
  static const char* kEmpty[] = {"none", "n a", "no issues", "no issues found", "nothing",
                                 "no issues with the symbols", "no issues with the code",
                                 "no issues detected", "no symbol issues", "no code issues"};
  std::string s = squash(text);
  return std::any_of(std::begin(kEmpty), std::end(kEmpty), [&](const char* e) { return s == e; });
}

}  // namespace

std::string render_return_value(const RunOutcome& run) {
  if (run.status != RunStatus::ok || !run.return_value) return "None";
  if (run.return_value->is_null()) return "None";
  return run.return_value->dump();
}

std::string render_judge_prompt(const SymbolStore& symbols, const ProgramArtifact& program,
                                const RunOutcome& run) {
  return render_template(assets::lookup("evaluator"), {{"json_str", symbols.root().dump(2)},
                                                        {"code_str", program.source},
                                                        {"output", render_return_value(run)},
                                                        {"stdout", run.stdout_text},
                                                        {"err", run.exception_text}});
}

std::vector<ContentPart> attachment_parts(const ReasoningInstance& instance) {
  std::vector<ContentPart> parts;
  for (const auto& media : instance.attachments) {
    std::ifstream in(media.path, std::ios::binary);
    if (!in) throw Error("cannot read attachment " + media.path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    parts.push_back(ContentPart::make_image(buf.str(), media.media_type));
  }
  return parts;
}

ModelRequest build_judge_request(const ReasoningInstance& instance, const SymbolStore& symbols,
                                 const ProgramArtifact& program, const RunOutcome& run,
                                 const std::string& model_id, double temperature) {
  ModelRequest request;
  request.model_id = model_id;
  request.temperature = temperature;
  request.messages.push_back(
      {Role::system, {ContentPart::make_text(render_judge_prompt(symbols, program, run))}});
  Message user{Role::user, {ContentPart::make_text(instance.query_text)}};
  for (auto& part : attachment_parts(instance)) user.parts.push_back(std::move(part));
  request.messages.push_back(std::move(user));
  return request;
}

bool is_no_issue_reply(const std::string& text) {
  std::string s = squash(text);
  if (s.empty()) return true;
  static const char* kReplies[] = {"no issues",
                                   "no issues found",
                                   "no issues were found",
                                   "no issues detected",
                                   "no issues present",
                                   "no issues are present",
                                   "there are no issues",
                                   "there are no issues present",
                                   "none",
                                   "no issues the code is correct",
                                   "the code has no issues",
                                   "no significant issues",
                                   "no significant issues found"};
  return std::any_of(std::begin(kReplies), std::end(kReplies),
                     [&](const char* r) { return s == r; });
}

void split_judge_findings(const std::string& text, std::vector<std::string>& symbol_issues,
                          std::vector<std::string>& program_issues) {
  symbol_issues.clear();
  program_issues.clear();
  if (is_no_issue_reply(text)) return;

  Section section = Section::none;
  std::string current;
  Section current_section = Section::none;
  auto flush = [&] {
    std::string item = trim(current);
    current.clear();
    if (item.empty() || is_empty_finding(item)) return;
    (current_section == Section::symbols ? symbol_issues : program_issues).push_back(item);
  };

  std::istringstream in(text);
  std::string raw;
  bool in_fence = false;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = trim(raw);
    if (line.rfind("```", 0) == 0) {
      in_fence = !in_fence;
      current += (current.empty() ? "" : "\n") + raw;
      continue;
    }
    if (in_fence) {
      current += "\n" + raw;
      continue;
    }
    if (line.empty()) {
      flush();
      continue;
    }

    std::size_t marker = list_marker(line);
    std::string body = marker ? line.substr(marker) : line;
    bool heading_syntax = line[0] == '#' || (body.size() > 4 && body.rfind("**", 0) == 0);
    std::string label = body;
    std::string rest;
    if (auto colon = body.find(':'); colon != std::string::npos) {
      label = body.substr(0, colon);
      rest = trim(body.substr(colon + 1));
      while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.erase(0, 1);
      rest = trim(rest);
      heading_syntax = true;
    }
    if (heading_syntax) {
      if (auto target = heading_section(strip_emphasis(label))) {
        flush();
        section = *target;
        current_section = section;
        if (!rest.empty()) current = rest;
        continue;
      }
    }
    if (marker) {
      flush();
      current_section = section;
      current = body;
    } else {
      if (current.empty()) current_section = section;
      current += (current.empty() ? "" : " ") + line;
    }
  }
  flush();
}

JudgeVerdict judge(Provider& provider, const ReasoningInstance& instance, const SymbolStore& symbols,
                   const ProgramArtifact& program, const RunOutcome& run, const std::string& model_id,
                   double temperature) {
  ModelResponse response =
      provider.complete(build_judge_request(instance, symbols, program, run, model_id, temperature));
  JudgeVerdict verdict;
  verdict.summary = trim(response.text);
  verdict.usage = response.usage;
  split_judge_findings(verdict.summary, verdict.symbol_issues, verdict.program_issues);
  return verdict;
}

std::string feedback_text(const Feedback& feedback) {
  std::string out;
  if (!feedback.issues.messages.empty()) {
    out += "Automated checks:\n";
    for (const auto& m : feedback.issues.messages) out += "- " + m + "\n";
    out += "\n";
  }
  out += feedback.judge_summary.empty() ? "No issues reported." : feedback.judge_summary;
  return out;
}

std::vector<IssueSet> analyze_batch_serial(const std::vector<ProgramArtifact>& programs,
                                           const std::vector<RunOutcome>& runs,
                                           const AnswerSpec& spec, const AnalyzerOptions& options) {
  if (programs.size() != runs.size()) throw DomainError("programs and runs differ in length");
  std::vector<IssueSet> out;
  out.reserve(programs.size());
  for (std::size_t i = 0; i < programs.size(); ++i) {
    out.push_back(analyze(programs[i], runs[i], spec, options));
  }
  return out;
}

std::vector<IssueSet> analyze_batch(const std::vector<ProgramArtifact>& programs,
                                    const std::vector<RunOutcome>& runs, const AnswerSpec& spec,
                                    const AnalyzerOptions& options) {
  if (programs.size() != runs.size()) throw DomainError("programs and runs differ in length");
  std::vector<IssueSet> out(programs.size());
  std::vector<std::exception_ptr> errors(programs.size());
  const auto n = static_cast<long>(programs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = analyze(programs[k], runs[k], spec, options);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace pips
