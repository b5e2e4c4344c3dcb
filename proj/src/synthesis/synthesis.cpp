#include "pips/synthesis/synthesis.hpp"

#include <cctype>
#include <chrono>

#include "pips/core/answer.hpp"
#include "pips/core/fenced.hpp"
#include "pips/core/prompts.hpp"
#include "pips/evaluator/judge.hpp"

namespace pips {

namespace {

constexpr std::string_view kInitialReprompt =
    "Your reply must contain the extracted symbols in a ```json code block and the program in "
    "a separate ```python code block defining `solve(symbols)`. Please output both blocks.";
constexpr std::string_view kRefineReprompt =
    "Please either output revised code (and optionally revised symbols) in markdown code "
    "blocks, or output the word \"FINISHED\" and nothing else.";

Message user_turn(const ReasoningInstance& instance) {
  Message user{Role::user, {ContentPart::make_text(instance.query_text)}};
  for (auto& part : attachment_parts(instance)) user.parts.push_back(std::move(part));
  return user;
}

Message text_turn(Role role, std::string_view text) {
  return Message{role, {ContentPart::make_text(std::string(text))}};
}

std::optional<SymbolStore> parse_symbols(const FencedBlock& block, std::string& error) {
  try {
    return SymbolStore::parse(block.body);
  } catch (const SchemaError& e) {
    error = e.what();
    return std::nullopt;
  }
}

}  // namespace

void LoopConfig::validate() const {
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (model_id.empty()) throw ConfigError("model_id must be set");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  limits.validate();
  prices.validate();
}

TraceAction RefineOutcome::action() const {
  if (finished) return TraceAction::finished;
  if (symbols && program) return TraceAction::revised_both;
  if (symbols) return TraceAction::revised_symbols;
  return TraceAction::revised_program;
}

std::string render_refine_prompt(const IterationTrace& trace) {
  return render_template(assets::lookup("generator_refine"),
                         {{"output", render_return_value(trace.run)},
                          {"stdout", trace.run.stdout_text},
                          {"err", trace.run.exception_text},
                          {"checker_output", feedback_text(trace.feedback)}});
}

bool is_finished_reply(const std::string& text) {
  std::string core;
  for (char c : text) {
    if (c == '`' || c == '"' || c == '\'' || c == '*' || c == '_' ||
        std::isspace(static_cast<unsigned char>(c))) {
      continue;
    }
    core.push_back(c);
  }
  if (!core.empty() && core.back() == '.') core.pop_back();
  return core == "FINISHED";
}

SynthesisEngine::SynthesisEngine(Provider& provider, Executor& executor, LoopConfig config)
    : provider_(provider), executor_(executor), config_(std::move(config)) {
  config_.validate();
}

ModelResponse SynthesisEngine::call(const ModelRequest& request) {
  return provider_.complete(request);
}

ModelRequest SynthesisEngine::initial_request(const ReasoningInstance& instance) const {
  ModelRequest request;
  request.model_id = config_.model_id;
  request.temperature = config_.temperature;
  request.max_output_tokens = config_.max_output_tokens;
  request.messages.push_back(text_turn(Role::system, assets::lookup("generator_initial")));
  request.messages.push_back(user_turn(instance));
  return request;
}

ModelRequest SynthesisEngine::refine_request(const ReasoningInstance& instance,
                                             const std::vector<IterationTrace>& history) const {
  ModelRequest request = initial_request(instance);
  for (const auto& trace : history) {
    request.messages.push_back(text_turn(Role::assistant, trace.response_text));
    request.messages.push_back(text_turn(Role::user, render_refine_prompt(trace)));
  }
  return request;
}

InitialGeneration SynthesisEngine::generate_initial(const ReasoningInstance& instance) {
  ModelRequest request = initial_request(instance);
  InitialGeneration out;
  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ModelResponse response = call(request);
    out.usage += response.usage;
    auto blocks = parse_fenced_blocks(response.text);
    auto json = last_json_block(blocks);
    auto code = last_code_block(blocks);
    std::optional<SymbolStore> symbols;
    if (!json) {
      problem = "no JSON block with symbols";
    } else if (!(symbols = parse_symbols(*json, problem))) {
      problem = "symbols block is not valid JSON: " + problem;
    } else if (!code) {
      problem = "no code block";
    } else {
      out.symbols = std::move(*symbols);
      out.program = ProgramArtifact{code->body, "solve", 0};
      out.response_text = response.text;
      return out;
    }
    out.warnings.push_back("initial reply rejected: " + problem);
    request.messages.push_back(text_turn(Role::assistant, response.text));
    request.messages.push_back(text_turn(Role::user, kInitialReprompt));
  }
  throw MissingBlock("initial generation failed after a re-prompt: " + problem);
}

RefineOutcome SynthesisEngine::refine_step(const ReasoningInstance& instance,
                                           const std::vector<IterationTrace>& history) {
  if (history.empty()) throw DomainError("refine_step needs at least one evaluated iteration");
  ModelRequest request = refine_request(instance, history);
  RefineOutcome out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ModelResponse response = call(request);
    out.usage += response.usage;
    out.response_text = response.text;
    auto blocks = parse_fenced_blocks(response.text);
    auto json = last_json_block(blocks);
    auto code = last_code_block(blocks);
    if (json) {
      std::string error;
      out.symbols = parse_symbols(*json, error);
      if (!out.symbols) out.warnings.push_back("revised symbols ignored: " + error);
    }
    if (code) out.program = ProgramArtifact{code->body, "solve", 0};
    if (out.symbols || out.program) return out;
    if (!json && is_finished_reply(response.text)) {
      out.finished = true;
      return out;
    }
    if (attempt == 0) {
      out.warnings.push_back("refinement reply had neither FINISHED nor a usable block; re-prompted");
      request.messages.push_back(text_turn(Role::assistant, response.text));
      request.messages.push_back(text_turn(Role::user, kRefineReprompt));
    }
  }
  out.finished = true;
  out.warnings.push_back("refinement reply still unusable after a re-prompt; treated as FINISHED");
  return out;
}

void SynthesisEngine::evaluate(const ReasoningInstance& instance, IterationTrace& trace,
                               bool with_judge) {
  trace.run = executor_.execute(trace.program, trace.symbols, config_.limits);
  trace.feedback.run = trace.run;
  trace.feedback.issues = analyze(trace.program, trace.run, instance.answer_spec, config_.analyzer);
  if (!with_judge) return;
  JudgeVerdict verdict = judge(provider_, instance, trace.symbols, trace.program, trace.run,
                               config_.model_id, config_.temperature);
  trace.usage += verdict.usage;
  trace.feedback.judge_summary = std::move(verdict.summary);
  trace.feedback.symbol_issues = std::move(verdict.symbol_issues);
  trace.feedback.program_issues = std::move(verdict.program_issues);
}

void settle_answer(SolveResult& result, const RunOutcome& run, const IssueSet& issues,
                   const AnswerSpec& spec) {
  result.final_issues = issues;
  result.attempted_code = true;
  result.well_formed = is_well_formed(issues, run);
  result.non_trivial = is_non_trivial(issues, run);
  result.final_answer.reset();
  if (run.status != RunStatus::ok || !run.return_value) {
    result.warnings.push_back("final program did not run successfully (" +
                              std::string(to_string(run.status)) + ")");
    return;
  }
  try {
    result.final_answer = normalize_answer(*run.return_value, spec);
  } catch (const UnparseableAnswer& e) {
    result.warnings.push_back(std::string("final return value does not normalize: ") + e.what());
  }
}

SolveResult SynthesisEngine::run_loop(const ReasoningInstance& instance) {
  const auto started = std::chrono::steady_clock::now();
  SolveResult result;
  result.method = SolveMethod::synthesis;
  auto finish = [&]() -> SolveResult& {
    result.usage = {};
    for (const auto& t : result.trace) result.usage += t.usage;
    result.cost_usd = estimate_cost(result.usage, config_.prices);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  };

  try {
    InitialGeneration initial;
    try {
      initial = generate_initial(instance);
    } catch (const MissingBlock& e) {
      result.warnings.push_back(e.what());
      return finish();
    }
    IterationTrace first;
    first.index = 0;
    first.symbols = std::move(initial.symbols);
    first.program = std::move(initial.program);
    first.action = TraceAction::initial;
    first.response_text = std::move(initial.response_text);
    first.usage = initial.usage;
    first.warnings = std::move(initial.warnings);
    result.trace.push_back(std::move(first));

    for (int i = 0;; ++i) {
      const bool last = i == config_.max_iterations;
      evaluate(instance, result.trace.back(), !last);
      if (last) {
        result.trace.back().action = TraceAction::exhausted;
        break;
      }
      RefineOutcome refined = refine_step(instance, result.trace);
      IterationTrace& current = result.trace.back();
      if (refined.finished) {
        current.usage += refined.usage;
        for (auto& w : refined.warnings) current.warnings.push_back(std::move(w));
        current.action = TraceAction::finished;
        break;
      }
      IterationTrace next;
      next.index = i + 1;
      next.action = refined.action();
      next.symbols = refined.symbols ? std::move(*refined.symbols) : current.symbols;
      if (refined.program) {
        next.program = std::move(*refined.program);
        next.program.origin_iteration = i + 1;
      } else {
        next.program = current.program;
      }
      next.response_text = std::move(refined.response_text);
      next.usage = refined.usage;
      next.warnings = std::move(refined.warnings);
      result.trace.push_back(std::move(next));
    }
  } catch (const Error& e) {
    finish();
    throw SolveAborted(std::string("synthesis aborted: ") + e.what(), result);
  }

  const IterationTrace& chosen = result.trace.back();
  settle_answer(result, chosen.run, chosen.feedback.issues, instance.answer_spec);
  return finish();
}

}  // namespace pips
