#include "pips/baselines/baselines.hpp"

#include <cctype>
#include <chrono>
#include <sstream>

#include "pips/core/answer.hpp"
#include "pips/core/errors.hpp"
#include "pips/core/fenced.hpp"
#include "pips/core/prompts.hpp"
#include "pips/evaluator/judge.hpp"
#include "pips/synthesis/synthesis.hpp"

namespace pips {

namespace {

constexpr std::string_view kMarker = "FINAL ANSWER";
constexpr std::string_view kCotReprompt =
    "Please state your final answer on its own line in the form:\nFINAL ANSWER: <answer>";

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Drops markdown emphasis and a leading colon around a marker payload.
std::string clean_payload(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '_' || s.front() == ':')) {
    s = trim(s.substr(1));
  }
  while (!s.empty() && (s.back() == '*' || s.back() == '_')) s = trim(s.substr(0, s.size() - 1));
  return s;
}

std::string last_nonempty_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) last = trim(line);
  }
  return last;
}

ModelRequest single_turn(const BaselineConfig& config, const ReasoningInstance& instance,
                         const std::string& prompt) {
  ModelRequest request;
  request.model_id = config.model_id;
  request.temperature = config.temperature;
  request.max_output_tokens = config.max_output_tokens;
  Message user{Role::user, {ContentPart::make_text(prompt)}};
  for (auto& part : attachment_parts(instance)) user.parts.push_back(std::move(part));
  request.messages.push_back(std::move(user));
  return request;
}

}  // namespace

void BaselineConfig::validate() const {
  if (model_id.empty()) throw ConfigError("model_id must be set");
  if (pot_max_retries < 1) throw ConfigError("pot_max_retries must be >= 1");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  limits.validate();
  prices.validate();
}

std::optional<std::string> extract_final_answer(const std::string& text) {
  std::string upper = text;
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const std::size_t at = upper.rfind(kMarker);
  if (at == std::string::npos) return std::nullopt;
  std::string rest = text.substr(at + kMarker.size());
  std::size_t eol = rest.find('\n');
  std::string payload = clean_payload(rest.substr(0, eol));
  if (payload.empty() && eol != std::string::npos) {
    std::istringstream in(rest.substr(eol + 1));
    std::string line;
    while (std::getline(in, line)) {
      payload = clean_payload(line);
      if (!payload.empty()) break;
    }
  }
  return payload;
}

std::string render_cot_prompt(const ReasoningInstance& instance) {
  return render_template(assets::lookup("cot"), {{"question", instance.query_text}});
}

std::string render_pot_prompt(const ReasoningInstance& instance) {
  return render_template(assets::lookup("pot"), {{"question", instance.query_text}});
}

std::string render_pot_retry_prompt(const RunOutcome& failed) {
  std::string err = failed.exception_text;
  if (err.empty()) err = "run status: " + std::string(to_string(failed.status));
  return render_template(assets::lookup("pot_retry"), {{"err", err}});
}

BaselineSolver::BaselineSolver(Provider& provider, Executor& executor, BaselineConfig config)
    : provider_(provider), executor_(executor), config_(std::move(config)) {
  config_.validate();
}

SolveResult BaselineSolver::cot_solve(const ReasoningInstance& instance) {
  const auto started = std::chrono::steady_clock::now();
  SolveResult result;
  result.method = SolveMethod::cot;
  ModelRequest request = single_turn(config_, instance, render_cot_prompt(instance));

  ModelResponse response = provider_.complete(request);
  result.usage += response.usage;
  std::optional<std::string> answer = extract_final_answer(response.text);
  if (!answer) {
    request.messages.push_back({Role::assistant, {ContentPart::make_text(response.text)}});
    request.messages.push_back({Role::user, {ContentPart::make_text(std::string(kCotReprompt))}});
    response = provider_.complete(request);
    result.usage += response.usage;
    answer = extract_final_answer(response.text);
    if (answer) {
      result.warnings.push_back("no FINAL ANSWER marker in the first reply; re-prompted");
    } else {
      answer = last_nonempty_line(response.text);
      result.warnings.push_back("no FINAL ANSWER marker after a re-prompt; used the last line");
    }
  }
  if (answer && !answer->empty()) {
    try {
      result.final_answer = normalize_answer(std::string_view(*answer), instance.answer_spec);
    } catch (const UnparseableAnswer& e) {
      result.warnings.push_back(std::string("answer does not normalize: ") + e.what());
    }
  } else {
    result.warnings.push_back("empty answer");
  }
  result.cost_usd = estimate_cost(result.usage, config_.prices);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

SolveResult BaselineSolver::run_pot(const ReasoningInstance& instance, int max_attempts,
                                    SolveMethod method) {
  const auto started = std::chrono::steady_clock::now();
  SolveResult result;
  result.method = method;
  ModelRequest request = single_turn(config_, instance, render_pot_prompt(instance));

  bool produced_code = false;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    ModelResponse response;
    try {
      response = provider_.complete(request);
    } catch (const Error& e) {
      for (const auto& t : result.trace) result.usage += t.usage;
      throw SolveAborted(std::string("baseline aborted: ") + e.what(), result);
    }
    IterationTrace trace;
    trace.index = attempt;
    trace.action = attempt == 0 ? TraceAction::initial : TraceAction::revised_program;
    trace.response_text = response.text;
    trace.usage = response.usage;

    auto code = last_code_block(parse_fenced_blocks(response.text));
    if (code) {
      produced_code = true;
      trace.program = ProgramArtifact{code->body, "solve", attempt};
      trace.run = executor_.execute(trace.program, std::nullopt, config_.limits);
      trace.feedback.issues =
          analyze(trace.program, trace.run, instance.answer_spec, config_.analyzer);
    } else {
      trace.run.status = RunStatus::harness_error;
      trace.run.exception_text = "No code block was found in the reply.";
      trace.warnings.push_back("reply has no code block");
    }
    trace.feedback.run = trace.run;
    const RunOutcome run = trace.run;
    result.trace.push_back(std::move(trace));
    if (run.status == RunStatus::ok) break;
    if (attempt + 1 < max_attempts) {
      request.messages.push_back({Role::assistant, {ContentPart::make_text(response.text)}});
      request.messages.push_back(
          {Role::user, {ContentPart::make_text(render_pot_retry_prompt(run))}});
    }
  }

  const IterationTrace& last = result.trace.back();
  if (produced_code && !last.program.source.empty()) {
    settle_answer(result, last.run, last.feedback.issues, instance.answer_spec);
  } else {
    result.attempted_code = produced_code;
    result.warnings.push_back("no code block in the final reply");
  }
  for (const auto& t : result.trace) result.usage += t.usage;
  result.cost_usd = estimate_cost(result.usage, config_.prices);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

SolveResult BaselineSolver::pot_solve(const ReasoningInstance& instance) {
  return run_pot(instance, 1, SolveMethod::pot);
}

SolveResult BaselineSolver::pot_retries_solve(const ReasoningInstance& instance) {
  return run_pot(instance, config_.pot_max_retries, SolveMethod::pot_retries);
}

SolveResult BaselineSolver::solve(const ReasoningInstance& instance, SolveMethod method) {
  switch (method) {
    case SolveMethod::cot: return cot_solve(instance);
    case SolveMethod::pot: return pot_solve(instance);
    case SolveMethod::pot_retries: return pot_retries_solve(instance);
    case SolveMethod::synthesis: break;
  }
  throw DomainError("baseline solver does not run synthesis");
}

}  // namespace pips
