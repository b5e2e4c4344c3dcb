#include "pips/evaluator/analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "pips/core/answer.hpp"
#include "pips/core/errors.hpp"
#include "pips/evaluator/pyast.hpp"
#include "pips/evaluator/trivial.hpp"

namespace pips {
namespace {

using py::Token;
using py::TokenKind;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Tokens without comments and blank-line markers.
std::vector<Token> significant(const std::vector<Token>& tokens) {
  std::vector<Token> out;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::comment && t.kind != TokenKind::nl) out.push_back(t);
  }
  return out;
}

bool starts_statement(const std::vector<Token>& toks, std::size_t i) {
  if (i == 0) return true;
  const Token& p = toks[i - 1];
  return p.kind == TokenKind::newline || p.kind == TokenKind::indent || p.kind == TokenKind::dedent ||
         (p.kind == TokenKind::op && (p.text == ";" || p.text == ":"));
}

bool is_name(const Token& t, std::string_view text) { return t.kind == TokenKind::name && t.text == text; }
bool is_op(const Token& t, std::string_view text) { return t.kind == TokenKind::op && t.text == text; }

bool ends_statement(const std::vector<Token>& toks, std::size_t i) {
  if (i >= toks.size()) return true;
  const Token& t = toks[i];
  return t.kind == TokenKind::newline || t.kind == TokenKind::end || is_op(t, ";");
}

const std::regex& marker_regex() {
  static const std::regex re(R"((^|[^A-Za-z0-9_])(todo|fixme)([^A-Za-z0-9_]|$))", std::regex::icase);
  return re;
}

struct Finding {
  bool hit = false;
  std::vector<std::string> messages;
  void add(std::string m) {
    hit = true;
    messages.push_back(std::move(m));
  }
};

Finding scan_placeholders(const py::TokenStream& stream) {
  Finding f;
  for (const auto& t : stream.tokens) {
    if (t.kind != TokenKind::comment) continue;
    if (std::regex_search(t.text, marker_regex()))
      f.add("placeholder: TODO/FIXME marker in comment on line " + std::to_string(t.line));
    if (lower(t.text).find("placeholder") != std::string::npos)
      f.add("placeholder: comment mentions a placeholder on line " + std::to_string(t.line));
  }
  auto toks = significant(stream.tokens);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (t.kind == TokenKind::string && starts_statement(toks, i)) {
      std::size_t j = i;
      while (j < toks.size() && toks[j].kind == TokenKind::string) ++j;
      if (ends_statement(toks, j)) {
        for (std::size_t k = i; k < j; ++k) {
          if (std::regex_search(toks[k].text, marker_regex()))
            f.add("placeholder: TODO/FIXME marker in docstring on line " + std::to_string(toks[k].line));
        }
      }
    }
    if (is_op(t, "...") && starts_statement(toks, i) && ends_statement(toks, i + 1))
      f.add("placeholder: bare '...' statement on line " + std::to_string(t.line));
    if (is_name(t, "raise") && i + 1 < toks.size() && is_name(toks[i + 1], "NotImplementedError"))
      f.add("placeholder: raises NotImplementedError on line " + std::to_string(t.line));
    if (is_name(t, "def") && starts_statement(toks, i)) {
      // Find the colon that ends the header.
      std::size_t j = i + 1;
      int depth = 0;
      for (; j < toks.size(); ++j) {
        const Token& h = toks[j];
        if (h.kind == TokenKind::op) {
          if (h.text == "(" || h.text == "[" || h.text == "{") ++depth;
          if (h.text == ")" || h.text == "]" || h.text == "}") --depth;
          if (h.text == ":" && depth == 0) break;
        }
        if (h.kind == TokenKind::newline || h.kind == TokenKind::end) break;
      }
      if (j >= toks.size() || !is_op(toks[j], ":")) continue;
      std::vector<const Token*> body;
      std::size_t k = j + 1;
      if (k < toks.size() && toks[k].kind == TokenKind::newline) {
        k += 1;
        if (k >= toks.size() || toks[k].kind != TokenKind::indent) continue;
        int level = 0;
        for (; k < toks.size(); ++k) {
          if (toks[k].kind == TokenKind::indent) ++level;
          if (toks[k].kind == TokenKind::dedent && --level == 0) break;
          if (toks[k].kind == TokenKind::end) break;
          if (toks[k].kind != TokenKind::indent) body.push_back(&toks[k]);
        }
      } else {
        for (; k < toks.size() && toks[k].kind != TokenKind::newline && toks[k].kind != TokenKind::end; ++k)
          body.push_back(&toks[k]);
        if (k < toks.size() && toks[k].kind == TokenKind::newline) body.push_back(&toks[k]);
      }
      std::size_t b = 0;
      while (b < body.size() && body[b]->kind == TokenKind::string) ++b;
      bool had_docstring = b > 0;
      if (had_docstring && b < body.size() && body[b]->kind == TokenKind::newline) ++b;
      else if (had_docstring && b < body.size()) b = 0;
      std::vector<const Token*> rest(body.begin() + static_cast<long>(b), body.end());
      while (!rest.empty() && rest.back()->kind == TokenKind::newline) rest.pop_back();
      bool noop = rest.empty() ||
                  (rest.size() == 1 && (is_name(*rest[0], "pass") || is_op(*rest[0], "...")));
      if (noop) f.add("placeholder: function body on line " + std::to_string(t.line) + " does nothing");
    }
  }
  return f;
}

bool literal_only(const py::Expr& e) {
  using py::ExprKind;
  switch (e.kind) {
    case ExprKind::constant:
      return true;
    case ExprKind::unary_op:
    case ExprKind::bin_op:
    case ExprKind::list:
    case ExprKind::tuple:
    case ExprKind::set:
    case ExprKind::dict:
      for (const auto& i : e.items) {
        if (!i || !literal_only(*i)) return false;
      }
      for (const auto& v : e.values) {
        if (!literal_only(*v)) return false;
      }
      return true;
    default:
      return false;
  }
}

bool names_only(const py::Expr& e) {
  if (e.kind == py::ExprKind::name) return true;
  if (e.kind == py::ExprKind::tuple || e.kind == py::ExprKind::list) {
    return std::all_of(e.items.begin(), e.items.end(), [](const auto& i) { return names_only(*i); });
  }
  return false;
}

Finding scan_example_usage_ast(const py::Module& module) {
  using py::StmtKind;
  Finding f;
  for (const auto& s : module.body) {
    bool ok = false;
    switch (s->kind) {
      case StmtKind::import_stmt:
      case StmtKind::import_from:
      case StmtKind::function_def:
      case StmtKind::class_def:
      case StmtKind::pass:
        ok = true;
        break;
      case StmtKind::expr:
        ok = s->value->kind == py::ExprKind::constant && s->value->const_kind == py::ConstKind::string;
        break;
      case StmtKind::assign:
        ok = literal_only(*s->value) &&
             std::all_of(s->targets.begin(), s->targets.end(), [](const auto& t) { return names_only(*t); });
        break;
      case StmtKind::ann_assign:
        ok = names_only(*s->targets[0]) && (!s->value || literal_only(*s->value));
        break;
      default:
        break;
    }
    if (!ok) f.add("example_usage: top-level statement on line " + std::to_string(s->line) + " runs code");
  }
  return f;
}

// Token-level fallback for sources that do not parse.
Finding scan_example_usage_tokens(const py::TokenStream& stream) {
  Finding f;
  auto toks = significant(stream.tokens);
  int depth = 0;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t end = i;
    while (end < toks.size() && toks[end].kind != TokenKind::newline && toks[end].kind != TokenKind::end) ++end;
    std::size_t first = i;
    while (first < end && (toks[first].kind == TokenKind::indent || toks[first].kind == TokenKind::dedent)) {
      depth += toks[first].kind == TokenKind::indent ? 1 : -1;
      ++first;
    }
    if (depth <= 0 && first < end) {
      const Token& t = toks[first];
      bool ok = false;
      if (t.kind == TokenKind::name &&
          (t.text == "import" || t.text == "from" || t.text == "def" || t.text == "class" || t.text == "async" ||
           t.text == "pass")) {
        ok = true;
      } else if (is_op(t, "@")) {
        ok = true;
      } else if (t.kind == TokenKind::string) {
        ok = std::all_of(toks.begin() + static_cast<long>(first), toks.begin() + static_cast<long>(end),
                         [](const Token& x) { return x.kind == TokenKind::string; });
      } else if (t.kind == TokenKind::name && !py::is_keyword(t.text)) {
        std::size_t eq = first;
        while (eq < end && !is_op(toks[eq], "=")) ++eq;
        if (eq < end) {
          ok = true;
          for (std::size_t k = eq + 1; k < end; ++k) {
            const Token& v = toks[k];
            if (v.kind == TokenKind::name && v.text != "True" && v.text != "False" && v.text != "None") ok = false;
          }
        }
      }
      if (!ok) f.add("example_usage: top-level statement on line " + std::to_string(t.line) + " runs code");
    }
    i = end + 1;
  }
  return f;
}

Finding scan_raw_media(const py::TokenStream& stream, const std::vector<std::string>& deny) {
  Finding f;
  if (deny.empty()) return f;
  auto toks = significant(stream.tokens);
  auto check = [&](const std::string& module, int line) {
    std::string root = module.substr(0, module.find('.'));
    if (std::find(deny.begin(), deny.end(), root) != deny.end())
      f.add("raw_media_processing: imports '" + module + "' on line " + std::to_string(line));
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!starts_statement(toks, i)) continue;
    if (is_name(toks[i], "import")) {
      std::size_t k = i + 1;
      while (k < toks.size() && !ends_statement(toks, k)) {
        std::string module;
        int line = toks[k].line;
        while (k < toks.size() && (toks[k].kind == TokenKind::name || is_op(toks[k], ".")) &&
               !is_name(toks[k], "as")) {
          module += toks[k].text;
          ++k;
        }
        if (!module.empty()) check(module, line);
        while (k < toks.size() && !ends_statement(toks, k) && !is_op(toks[k], ",")) ++k;
        if (k < toks.size() && is_op(toks[k], ",")) ++k;
        else break;
      }
    } else if (is_name(toks[i], "from")) {
      std::size_t k = i + 1;
      while (k < toks.size() && (is_op(toks[k], ".") || is_op(toks[k], "..."))) ++k;
      if (k > i + 1) continue;  // relative imports are local modules
      std::string module;
      while (k < toks.size() && (toks[k].kind == TokenKind::name || is_op(toks[k], ".")) && !is_name(toks[k], "import")) {
        module += toks[k].text;
        ++k;
      }
      if (!module.empty()) check(module, toks[i].line);
    }
  }
  return f;
}

// Token-level triviality for sources that do not parse: every return in the
// entry body is literal-only and the body never mentions a parameter.
bool trivial_tokens(const py::TokenStream& stream, std::string_view entry) {
  auto toks = significant(stream.tokens);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (!is_name(toks[i], "def") || !is_name(toks[i + 1], std::string(entry)) || !starts_statement(toks, i)) continue;
    std::size_t k = i + 2;
    std::set<std::string> params;
    int depth = 0;
    for (; k < toks.size(); ++k) {
      if (is_op(toks[k], "(")) ++depth;
      if (is_op(toks[k], ")")) --depth;
      if (depth == 1 && toks[k].kind == TokenKind::name && k > 0 &&
          (is_op(toks[k - 1], "(") || is_op(toks[k - 1], ",") || is_op(toks[k - 1], "*") || is_op(toks[k - 1], "**")))
        params.insert(toks[k].text);
      if (depth == 0 && is_op(toks[k], ":")) break;
      if (toks[k].kind == TokenKind::newline) return false;
    }
    int level = 0;
    bool any_return = false;
    for (++k; k < toks.size(); ++k) {
      if (toks[k].kind == TokenKind::indent) ++level;
      if (toks[k].kind == TokenKind::dedent && --level <= 0) break;
      if (toks[k].kind == TokenKind::end) break;
      if (toks[k].kind == TokenKind::name && params.count(toks[k].text)) return false;
      if (is_name(toks[k], "return")) {
        any_return = true;
        for (std::size_t r = k + 1; r < toks.size() && !ends_statement(toks, r); ++r) {
          const Token& v = toks[r];
          if (v.kind == TokenKind::name && v.text != "True" && v.text != "False" && v.text != "None") return false;
        }
      }
      if (is_name(toks[k], "for") || is_name(toks[k], "while") || is_name(toks[k], "if") || is_name(toks[k], "try"))
        return false;
    }
    return any_return;
  }
  return false;
}

struct Parsed {
  py::ParseResult result;
  std::optional<SyntaxDiagnostic> diagnostic;
};

Parsed parse_program(const ProgramArtifact& program) {
  Parsed p{py::parse_module(program.source), std::nullopt};
  if (p.result.error) {
    p.diagnostic = SyntaxDiagnostic{p.result.error->line, p.result.error->message};
    return p;
  }
  const py::Stmt* entry = py::find_entry(*p.result.module, program.entry_name);
  if (!entry) {
    p.diagnostic = SyntaxDiagnostic{1, "no entry definition '" + program.entry_name + "'"};
  } else if (entry->is_async) {
    p.diagnostic = SyntaxDiagnostic{entry->line, "entry '" + program.entry_name + "' must not be async"};
  }
  return p;
}

bool is_scalar(const Json& j) { return j.is_primitive(); }

bool null_admitted(const AnswerSpec& spec) {
  if (spec.kind == AnswerKind::free_text) return true;
  if (spec.kind == AnswerKind::multiple_choice) {
    for (const auto& option : spec.options) {
      if (normalize_answer(std::string_view(option), AnswerSpec{}).canonical_text == "none") return true;
    }
  }
  return false;
}

}  // namespace

std::optional<SyntaxDiagnostic> check_syntax(const ProgramArtifact& program) {
  return parse_program(program).diagnostic;
}

bool detect_trivial(const ProgramArtifact& program) {
  Parsed p = parse_program(program);
  if (p.result.module) return py::is_trivial_entry(*p.result.module, program.entry_name);
  return trivial_tokens(p.result.tokens, program.entry_name);
}

bool detect_placeholders(const ProgramArtifact& program) {
  return scan_placeholders(py::tokenize(program.source)).hit;
}

bool detect_example_usage(const ProgramArtifact& program) {
  Parsed p = parse_program(program);
  if (p.result.module) return scan_example_usage_ast(*p.result.module).hit;
  return scan_example_usage_tokens(p.result.tokens).hit;
}

bool detect_raw_media(const ProgramArtifact& program, const std::vector<std::string>& deny_list) {
  return scan_raw_media(py::tokenize(program.source), deny_list).hit;
}

ReturnCheck check_return(const RunOutcome& run, const AnswerSpec& spec) {
  ReturnCheck check;
  if (run.status != RunStatus::ok || !run.return_value) return check;
  const Json& value = *run.return_value;
  if (value.is_null()) {
    check.returns_null = !null_admitted(spec);
    return check;
  }
  if (!is_scalar(value)) {
    check.wrong_return_type = true;
    return check;
  }
  try {
    AnswerValue normalized = normalize_answer(value, spec);
    if (spec.kind == AnswerKind::multiple_choice && !names_an_option(normalized, spec)) check.wrong_return_type = true;
    if (spec.kind == AnswerKind::boolean && !std::holds_alternative<bool>(normalized.value))
      check.wrong_return_type = true;
  } catch (const UnparseableAnswer&) {
    check.wrong_return_type = true;
  }
  return check;
}

IssueSet analyze(const ProgramArtifact& program, const RunOutcome& run, const AnswerSpec& spec,
                 const AnalyzerOptions& options) {
  IssueSet issues;
  Parsed p = parse_program(program);
  auto absorb = [&](bool& flag, const Finding& f) {
    flag = f.hit;
    issues.messages.insert(issues.messages.end(), f.messages.begin(), f.messages.end());
  };
  if (p.diagnostic) {
    issues.syntax_error = true;
    issues.messages.push_back("syntax_error: line " + std::to_string(p.diagnostic->line) + ": " +
                              p.diagnostic->message);
  }
  absorb(issues.placeholder, scan_placeholders(p.result.tokens));
  if (p.result.module) {
    absorb(issues.example_usage, scan_example_usage_ast(*p.result.module));
    issues.trivial = py::is_trivial_entry(*p.result.module, program.entry_name);
  } else {
    absorb(issues.example_usage, scan_example_usage_tokens(p.result.tokens));
    issues.trivial = trivial_tokens(p.result.tokens, program.entry_name);
  }
  if (issues.trivial) issues.messages.push_back("trivial: the returned value does not depend on the input");
  absorb(issues.raw_media_processing, scan_raw_media(p.result.tokens, options.media_deny_list));

  switch (run.status) {
    case RunStatus::ok: {
      ReturnCheck rc = check_return(run, spec);
      issues.wrong_return_type = rc.wrong_return_type;
      issues.returns_null = rc.returns_null;
      if (rc.wrong_return_type)
        issues.messages.push_back("wrong_return_type: returned " + canonical_dump(*run.return_value) +
                                  ", expected a " + std::string(to_string(spec.kind)) + " answer");
      if (rc.returns_null) issues.messages.push_back("returns_null: returned None for a question that needs an answer");
      break;
    }
    case RunStatus::exception:
      issues.messages.push_back("exception: " + run.exception_text);
      break;
    case RunStatus::timeout:
      issues.messages.push_back("timeout: " + run.exception_text);
      break;
    case RunStatus::resource_exhausted:
      issues.messages.push_back("resource_exhausted: " + run.exception_text);
      break;
    case RunStatus::harness_error:
      issues.messages.push_back("harness_error: " + run.exception_text);
      break;
  }
  return issues;
}

bool is_well_formed(const IssueSet& issues, const RunOutcome& run) {
  return run.status == RunStatus::ok && run.return_value && is_scalar(*run.return_value) && !issues.syntax_error &&
         !issues.placeholder && !issues.wrong_return_type && !issues.returns_null;
}

bool is_non_trivial(const IssueSet& issues, const RunOutcome& run) {
  return is_well_formed(issues, run) && !issues.trivial;
}

std::optional<IssueCategory> primary_category(const IssueSet& issues) {
  if (issues.syntax_error) return IssueCategory::syntax;
  if (issues.placeholder) return IssueCategory::placeholder;
  if (issues.wrong_return_type || issues.returns_null) return IssueCategory::type;
  if (issues.trivial) return IssueCategory::trivial;
  return std::nullopt;
}

std::string_view to_string(IssueCategory category) {
  switch (category) {
    case IssueCategory::syntax: return "syntax";
    case IssueCategory::placeholder: return "placeholders";
    case IssueCategory::type: return "type";
    case IssueCategory::trivial: return "trivial";
  }
  return "syntax";
}

}  // namespace pips
