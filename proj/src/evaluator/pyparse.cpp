#include <algorithm>
#include <set>
#include <stdexcept>

#include "pips/evaluator/pyast.hpp"

namespace pips::py {
namespace {

struct ParseFailure {
  Diagnostic diagnostic;
};

const std::set<std::string, std::less<>> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                      "&=", "|=", "^=", ">>=", "<<=", "**="};

ExprPtr make_expr(ExprKind kind, const Token& at) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = at.line;
  e->col = at.col;
  return e;
}

ExprPtr make_expr(ExprKind kind, const Expr& at) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = at.line;
  e->col = at.col;
  return e;
}

std::string describe(const Expr& e) {
  switch (e.kind) {
    case ExprKind::constant:
    case ExprKind::fstring:
      if (e.const_kind == ConstKind::none || e.const_kind == ConstKind::boolean) return e.text;
      if (e.const_kind == ConstKind::ellipsis) return "ellipsis";
      return "literal";
    case ExprKind::call: return "function call";
    case ExprKind::bin_op:
    case ExprKind::unary_op: return "expression";
    case ExprKind::bool_op: return "expression";
    case ExprKind::compare: return "comparison";
    case ExprKind::lambda: return "lambda";
    case ExprKind::if_exp: return "conditional expression";
    case ExprKind::dict: return "dict literal";
    case ExprKind::set: return "set display";
    case ExprKind::list_comp: return "list comprehension";
    case ExprKind::set_comp: return "set comprehension";
    case ExprKind::dict_comp: return "dict comprehension";
    case ExprKind::generator: return "generator expression";
    case ExprKind::await_expr: return "await expression";
    case ExprKind::yield_expr:
    case ExprKind::yield_from: return "yield expression";
    case ExprKind::named: return "named expression";
    default: return "expression";
  }
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& all) {
    for (const auto& t : all) {
      if (t.kind != TokenKind::comment && t.kind != TokenKind::nl) toks_.push_back(t);
    }
    if (toks_.empty() || toks_.back().kind != TokenKind::end) toks_.push_back({TokenKind::end, "", 1, 0});
  }

  Module parse_file() {
    Module m;
    while (!at(TokenKind::end)) {
      if (at(TokenKind::newline)) {
        ++pos_;
        continue;
      }
      parse_statement(m.body);
    }
    return m;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& prev() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }
  bool at(TokenKind kind, std::size_t k = 0) const { return peek(k).kind == kind; }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    return peek(k).kind == TokenKind::op && peek(k).text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    return peek(k).kind == TokenKind::name && peek(k).text == kw;
  }
  const Token& take() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, std::string message) {
    throw ParseFailure{{t.line, t.col, std::move(message)}};
  }
  [[noreturn]] void fail_at(const Expr& e, std::string message) {
    throw ParseFailure{{e.line, e.col, std::move(message)}};
  }
  [[noreturn]] void unexpected() {
    const Token& t = peek();
    if (t.kind == TokenKind::indent) fail(t, "unexpected indent");
    if (t.kind == TokenKind::end) fail(t, "unexpected EOF while parsing");
    fail(t, "invalid syntax");
  }

  void expect_op(std::string_view op) {
    if (!at_op(op)) {
      if (op == ":" ) fail(peek(), "expected ':'");
      unexpected();
    }
    take();
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) unexpected();
    take();
  }
  std::string expect_name() {
    if (!at(TokenKind::name) || is_keyword(peek().text)) unexpected();
    return take().text;
  }

  bool at_expression_end() const {
    return at(TokenKind::newline) || at(TokenKind::end) || at_op(";") || at_op(")") || at_op("]") ||
           at_op("}") || at_op(":") || at_op("=") || at_kw("for") || at_kw("async") || at_kw("in") ||
           at_kw("else") || at_kw("from") || at_kw("as") || at_kw("if") ||
           (peek().kind == TokenKind::op && kAugOps.count(peek().text) > 0) || at_op(",");
  }

  // ---- statements -------------------------------------------------------

  StmtPtr make_stmt(StmtKind kind, const Token& at) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->line = at.line;
    s->col = at.col;
    return s;
  }

  void parse_statement(Block& out) {
    if (at(TokenKind::indent)) fail(peek(), "unexpected indent");
    if (at(TokenKind::dedent)) fail(peek(), "unindent does not match any outer indentation level");
    const Token& t = peek();
    if (t.kind == TokenKind::name) {
      if (t.text == "def") return out.push_back(parse_funcdef({}, false));
      if (t.text == "class") return out.push_back(parse_classdef({}));
      if (t.text == "if") return out.push_back(parse_if());
      if (t.text == "while") return out.push_back(parse_while());
      if (t.text == "for") return out.push_back(parse_for(false));
      if (t.text == "try") return out.push_back(parse_try());
      if (t.text == "with") return out.push_back(parse_with(false));
      if (t.text == "async") {
        if (at_kw("def", 1)) {
          take();
          return out.push_back(parse_funcdef({}, true));
        }
        if (at_kw("for", 1)) {
          take();
          return out.push_back(parse_for(true));
        }
        if (at_kw("with", 1)) {
          take();
          return out.push_back(parse_with(true));
        }
        unexpected();
      }
      if (t.text == "match") {
        if (auto m = try_parse_match()) return out.push_back(std::move(m));
      }
    }
    if (at_op("@")) return out.push_back(parse_decorated());
    parse_simple_statements(out);
  }

  void parse_simple_statements(Block& out) {
    while (true) {
      auto s = parse_simple_statement();
      s->end_line = prev().line;
      out.push_back(std::move(s));
      if (at_op(";")) {
        take();
        if (at(TokenKind::newline)) break;
        continue;
      }
      break;
    }
    if (!at(TokenKind::newline)) {
      if (at(TokenKind::end)) return;
      unexpected();
    }
    take();
  }

  Block parse_block() {
    expect_op(":");
    Block body;
    if (at(TokenKind::newline)) {
      take();
      if (!at(TokenKind::indent)) fail(peek(), "expected an indented block");
      take();
      while (!at(TokenKind::dedent) && !at(TokenKind::end)) {
        if (at(TokenKind::newline)) {
          take();
          continue;
        }
        parse_statement(body);
      }
      if (at(TokenKind::dedent)) take();
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  StmtPtr parse_simple_statement() {
    const Token& t = peek();
    if (t.kind == TokenKind::name) {
      if (t.text == "pass") {
        take();
        return make_stmt(StmtKind::pass, t);
      }
      if (t.text == "break") {
        take();
        return make_stmt(StmtKind::break_stmt, t);
      }
      if (t.text == "continue") {
        take();
        return make_stmt(StmtKind::continue_stmt, t);
      }
      if (t.text == "return") {
        auto s = make_stmt(StmtKind::return_stmt, take());
        if (!at_simple_end()) {
          s->value = parse_star_expressions();
          reject_bare_starred(*s->value);
        }
        return s;
      }
      if (t.text == "raise") {
        auto s = make_stmt(StmtKind::raise_stmt, take());
        if (!at_simple_end()) {
          s->value = parse_expression();
          if (at_kw("from")) {
            take();
            s->extra = parse_expression();
          }
        }
        return s;
      }
      if (t.text == "global" || t.text == "nonlocal") {
        auto s = make_stmt(t.text == "global" ? StmtKind::global_stmt : StmtKind::nonlocal_stmt, take());
        s->names.push_back(expect_name());
        while (at_op(",")) {
          take();
          s->names.push_back(expect_name());
        }
        return s;
      }
      if (t.text == "del") {
        auto s = make_stmt(StmtKind::del, take());
        auto target = parse_target_list();
        validate_target(*target, TargetUse::del);
        s->targets.push_back(std::move(target));
        return s;
      }
      if (t.text == "assert") {
        auto s = make_stmt(StmtKind::assert_stmt, take());
        s->value = parse_expression();
        if (at_op(",")) {
          take();
          s->extra = parse_expression();
        }
        return s;
      }
      if (t.text == "import") return parse_import();
      if (t.text == "from") return parse_from_import();
    }
    return parse_expression_statement();
  }

  bool at_simple_end() const { return at(TokenKind::newline) || at_op(";") || at(TokenKind::end); }

  StmtPtr parse_import() {
    auto s = make_stmt(StmtKind::import_stmt, take());
    while (true) {
      Alias a;
      a.name = parse_dotted_name();
      if (at_kw("as")) {
        take();
        a.asname = expect_name();
      }
      s->aliases.push_back(std::move(a));
      if (!at_op(",")) break;
      take();
    }
    return s;
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (at_op(".")) {
      take();
      name += "." + expect_name();
    }
    return name;
  }

  StmtPtr parse_from_import() {
    auto s = make_stmt(StmtKind::import_from, take());
    while (at_op(".") || at_op("...")) s->level += static_cast<int>(take().text.size());
    if (!at_kw("import")) s->text = parse_dotted_name();
    else if (s->level == 0) unexpected();
    expect_kw("import");
    if (at_op("*")) {
      take();
      s->aliases.push_back({"*", ""});
      return s;
    }
    bool paren = at_op("(");
    if (paren) take();
    while (true) {
      Alias a;
      a.name = expect_name();
      if (at_kw("as")) {
        take();
        a.asname = expect_name();
      }
      s->aliases.push_back(std::move(a));
      if (!at_op(",")) break;
      take();
      if (paren && at_op(")")) break;
      if (!paren && at_simple_end()) fail(peek(), "trailing comma not allowed without surrounding parentheses");
    }
    if (paren) expect_op(")");
    return s;
  }

  StmtPtr parse_expression_statement() {
    const Token& start = peek();
    ExprPtr first = at_kw("yield") ? parse_yield() : parse_star_expressions();
    if (at_op(":")) {
      auto s = make_stmt(StmtKind::ann_assign, start);
      take();
      if (first->kind == ExprKind::tuple && !first->parenthesized)
        fail_at(*first, "only single target (not tuple) can be annotated");
      if (first->kind == ExprKind::tuple || first->kind == ExprKind::list)
        fail_at(*first, "only single target (not " + std::string(first->kind == ExprKind::tuple ? "tuple" : "list") +
                            ") can be annotated");
      validate_target(*first, TargetUse::augmented);
      s->extra = parse_expression();
      if (at_op("=")) {
        take();
        s->value = at_kw("yield") ? parse_yield() : parse_star_expressions();
      }
      s->targets.push_back(std::move(first));
      return s;
    }
    if (peek().kind == TokenKind::op && kAugOps.count(peek().text)) {
      auto s = make_stmt(StmtKind::aug_assign, start);
      s->text = take().text;
      validate_target(*first, TargetUse::augmented);
      s->value = at_kw("yield") ? parse_yield() : parse_star_expressions();
      reject_bare_starred(*s->value);
      s->targets.push_back(std::move(first));
      return s;
    }
    if (at_op("=")) {
      auto s = make_stmt(StmtKind::assign, start);
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (at_op("=")) {
        take();
        chain.push_back(at_kw("yield") ? parse_yield() : parse_star_expressions());
      }
      s->value = std::move(chain.back());
      chain.pop_back();
      reject_bare_starred(*s->value);
      for (auto& target : chain) {
        validate_target(*target, TargetUse::assign);
        s->targets.push_back(std::move(target));
      }
      return s;
    }
    reject_bare_starred(*first);
    auto s = make_stmt(StmtKind::expr, start);
    s->value = std::move(first);
    return s;
  }

  void reject_bare_starred(const Expr& e) {
    if (e.kind == ExprKind::starred) fail_at(e, "can't use starred expression here");
  }

  std::vector<ExprPtr> parse_decorators() {
    std::vector<ExprPtr> decorators;
    while (at_op("@")) {
      take();
      decorators.push_back(parse_named_expression());
      if (!at(TokenKind::newline)) unexpected();
      take();
    }
    return decorators;
  }

  StmtPtr parse_decorated() {
    auto decorators = parse_decorators();
    if (at_kw("def")) return parse_funcdef(std::move(decorators), false);
    if (at_kw("class")) return parse_classdef(std::move(decorators));
    if (at_kw("async") && at_kw("def", 1)) {
      take();
      return parse_funcdef(std::move(decorators), true);
    }
    unexpected();
  }

  StmtPtr parse_funcdef(std::vector<ExprPtr> decorators, bool is_async) {
    auto s = make_stmt(StmtKind::function_def, take());
    s->is_async = is_async;
    s->decorators = std::move(decorators);
    s->text = expect_name();
    expect_op("(");
    s->params = parse_params(")", true);
    expect_op(")");
    if (at_op("->")) {
      take();
      s->extra = parse_expression();
    }
    s->body = parse_block();
    return s;
  }

  std::vector<Param> parse_params(std::string_view close, bool annotations) {
    std::vector<Param> params;
    bool seen_default = false;
    bool seen_star = false;
    bool seen_slash = false;
    std::set<std::string> names;
    auto add_name = [&](Param& p, const Token& at_tok) {
      if (!names.insert(p.name).second) fail(at_tok, "duplicate argument '" + p.name + "' in function definition");
    };
    while (!at_op(close)) {
      const Token& t = peek();
      if (at_op("/")) {
        if (params.empty() || seen_star || seen_slash) fail(t, "invalid syntax");
        take();
        seen_slash = true;
        for (auto& p : params) p.kind = ParamKind::positional_only;
      } else if (at_op("**")) {
        take();
        Param p;
        p.kind = ParamKind::var_keyword;
        p.name = expect_name();
        if (annotations && at_op(":")) {
          take();
          p.annotation = parse_expression();
        }
        if (at_op("=")) fail(peek(), "var-keyword argument cannot have default value");
        add_name(p, t);
        params.push_back(std::move(p));
        if (at_op(",")) take();
        if (!at_op(close)) fail(peek(), "arguments cannot follow var-keyword argument");
        break;
      } else if (at_op("*")) {
        if (seen_star) fail(t, "* argument may appear only once");
        take();
        seen_star = true;
        if (at_op(",") || at_op(close)) {
          if (at_op(close)) fail(t, "named arguments must follow bare *");
          if (at_op(",", 0) && (at_op(close, 1) || at_op("**", 1))) fail(t, "named arguments must follow bare *");
        } else {
          Param p;
          p.kind = ParamKind::var_positional;
          p.name = expect_name();
          if (annotations && at_op(":")) {
            take();
            p.annotation = at_op("*") ? parse_star_expression() : parse_expression();
          }
          if (at_op("=")) fail(peek(), "var-positional argument cannot have default value");
          add_name(p, t);
          params.push_back(std::move(p));
        }
      } else {
        Param p;
        p.kind = seen_star ? ParamKind::keyword_only : ParamKind::normal;
        p.name = expect_name();
        if (annotations && at_op(":")) {
          take();
          p.annotation = parse_expression();
        }
        if (at_op("=")) {
          take();
          p.default_value = parse_expression();
          if (!seen_star) seen_default = true;
        } else if (seen_default && !seen_star) {
          fail(t, "non-default argument follows default argument");
        }
        add_name(p, t);
        params.push_back(std::move(p));
      }
      if (!at_op(",")) break;
      take();
    }
    return params;
  }

  StmtPtr parse_classdef(std::vector<ExprPtr> decorators) {
    auto s = make_stmt(StmtKind::class_def, take());
    s->decorators = std::move(decorators);
    s->text = expect_name();
    if (at_op("(")) {
      const Token& open = take();
      auto call = make_expr(ExprKind::call, open);
      parse_call_arguments(*call);
      for (std::size_t i = 0; i < call->items.size(); ++i) s->bases.push_back(std::move(call->items[i]));
    }
    s->body = parse_block();
    return s;
  }

  StmtPtr parse_if() {
    auto s = make_stmt(StmtKind::if_stmt, take());
    s->value = parse_named_expression();
    s->body = parse_block();
    if (at_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (at_kw("else")) {
      take();
      s->orelse = parse_block();
    }
    return s;
  }

  StmtPtr parse_while() {
    auto s = make_stmt(StmtKind::while_stmt, take());
    s->value = parse_named_expression();
    s->body = parse_block();
    if (at_kw("else")) {
      take();
      s->orelse = parse_block();
    }
    return s;
  }

  StmtPtr parse_for(bool is_async) {
    auto s = make_stmt(StmtKind::for_stmt, take());
    s->is_async = is_async;
    auto target = parse_target_list();
    validate_target(*target, TargetUse::assign);
    s->targets.push_back(std::move(target));
    expect_kw("in");
    s->value = parse_star_expressions();
    s->body = parse_block();
    if (at_kw("else")) {
      take();
      s->orelse = parse_block();
    }
    return s;
  }

  StmtPtr parse_try() {
    auto s = make_stmt(StmtKind::try_stmt, take());
    s->body = parse_block();
    bool seen_bare = false;
    while (at_kw("except")) {
      ExceptHandler h;
      const Token& t = take();
      h.line = t.line;
      if (seen_bare) fail(t, "default 'except:' must be last");
      if (at_op("*")) take();
      if (!at_op(":")) {
        h.type = parse_expression();
        if (at_op(",")) fail(peek(), "multiple exception types must be parenthesized");
        if (at_kw("as")) {
          take();
          h.name = expect_name();
        }
      } else {
        seen_bare = true;
      }
      h.body = parse_block();
      s->handlers.push_back(std::move(h));
    }
    if (at_kw("else")) {
      if (s->handlers.empty()) unexpected();
      take();
      s->orelse = parse_block();
    }
    if (at_kw("finally")) {
      take();
      s->finalbody = parse_block();
    }
    if (s->handlers.empty() && s->finalbody.empty()) fail(peek(), "expected 'except' or 'finally' block");
    return s;
  }

  StmtPtr parse_with(bool is_async) {
    auto s = make_stmt(StmtKind::with_stmt, take());
    s->is_async = is_async;
    if (at_op("(")) {
      std::size_t save = pos_;
      try {
        take();
        std::vector<WithItem> items;
        while (true) {
          items.push_back(parse_with_item());
          if (!at_op(",")) break;
          take();
          if (at_op(")")) break;
        }
        expect_op(")");
        if (!at_op(":")) throw ParseFailure{};
        s->with_items = std::move(items);
        s->body = parse_block();
        return s;
      } catch (const ParseFailure&) {
        if (!s->with_items.empty()) throw;
        pos_ = save;
      }
    }
    while (true) {
      s->with_items.push_back(parse_with_item());
      if (!at_op(",")) break;
      take();
    }
    s->body = parse_block();
    return s;
  }

  WithItem parse_with_item() {
    WithItem item;
    item.context = parse_expression();
    if (at_kw("as")) {
      take();
      item.target = parse_target();
      validate_target(*item.target, TargetUse::assign);
    }
    return item;
  }

  StmtPtr try_parse_match() {
    std::size_t save = pos_;
    StmtPtr s;
    try {
      s = make_stmt(StmtKind::match_stmt, take());
      s->value = parse_star_named_expressions_tuple();
      expect_op(":");
      if (!at(TokenKind::newline) || !at(TokenKind::indent, 1) || !at_kw("case", 2)) throw ParseFailure{};
    } catch (const ParseFailure&) {
      pos_ = save;
      return nullptr;
    }
    take();
    take();
    while (at_kw("case")) {
      MatchCase c;
      c.line = take().line;
      c.pattern = parse_pattern();
      if (at_kw("if")) {
        take();
        c.guard = parse_named_expression();
      }
      c.body = parse_block();
      s->cases.push_back(std::move(c));
    }
    if (!at(TokenKind::dedent)) unexpected();
    take();
    return s;
  }

  ExprPtr parse_pattern() {
    const Token& start = peek();
    std::vector<ExprPtr> items;
    bool tuple = false;
    while (true) {
      ExprPtr p = at_op("*") ? parse_star_expression() : parse_or_pattern();
      items.push_back(std::move(p));
      if (!at_op(",")) break;
      take();
      tuple = true;
      if (at_op(":") || at_kw("if")) break;
    }
    if (!tuple) return std::move(items.front());
    auto t = make_expr(ExprKind::tuple, start);
    t->items = std::move(items);
    return t;
  }

  ExprPtr parse_or_pattern() {
    ExprPtr p = parse_bitwise_or();
    if (at_kw("as")) {
      const Token& as = take();
      auto named = make_expr(ExprKind::named, as);
      auto target = make_expr(ExprKind::name, peek());
      target->text = expect_name();
      named->items.push_back(std::move(target));
      named->items.push_back(std::move(p));
      return named;
    }
    return p;
  }

  // ---- targets ----------------------------------------------------------

  enum class TargetUse { assign, augmented, del };

  // star_targets: comma separated, stops before 'in' or '='.
  ExprPtr parse_target_list() {
    const Token& start = peek();
    std::vector<ExprPtr> items;
    bool comma = false;
    while (true) {
      items.push_back(parse_target());
      if (!at_op(",")) break;
      take();
      comma = true;
      if (at_kw("in") || at_op("=") || at_simple_end()) break;
    }
    if (!comma) return std::move(items.front());
    auto t = make_expr(ExprKind::tuple, start);
    t->items = std::move(items);
    return t;
  }

  ExprPtr parse_target() {
    if (at_op("*")) {
      const Token& star = take();
      auto s = make_expr(ExprKind::starred, star);
      s->items.push_back(parse_bitwise_or());
      return s;
    }
    return parse_bitwise_or();
  }

  void validate_target(const Expr& e, TargetUse use, bool nested = false) {
    const char* verb = use == TargetUse::del ? "delete" : "assign to";
    switch (e.kind) {
      case ExprKind::name:
        if (e.text == "__debug__") fail_at(e, "cannot assign to __debug__");
        return;
      case ExprKind::attribute:
      case ExprKind::subscript:
        return;
      case ExprKind::tuple:
      case ExprKind::list: {
        if (use == TargetUse::augmented)
          fail_at(e, std::string("'") + (e.kind == ExprKind::tuple ? "tuple" : "list") +
                         "' is an illegal expression for augmented assignment");
        int starred = 0;
        for (const auto& item : e.items) {
          if (item->kind == ExprKind::starred) {
            if (use == TargetUse::del) fail_at(*item, "cannot delete starred");
            if (++starred > 1) fail_at(*item, "multiple starred expressions in assignment");
            validate_target(*item->items[0], use, true);
          } else {
            validate_target(*item, use, true);
          }
        }
        return;
      }
      case ExprKind::starred:
        if (!nested) fail_at(e, "starred assignment target must be in a list or tuple");
        validate_target(*e.items[0], use, true);
        return;
      default:
        if (use == TargetUse::augmented)
          fail_at(e, "'" + describe(e) + "' is an illegal expression for augmented assignment");
        fail_at(e, std::string("cannot ") + verb + " " + describe(e));
    }
  }

  // ---- expressions ------------------------------------------------------

  ExprPtr parse_star_expressions() {
    const Token& start = peek();
    ExprPtr first = parse_star_expression();
    if (!at_op(",")) return first;
    auto t = make_expr(ExprKind::tuple, start);
    t->items.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_expression_end() || at_op("=")) break;
      t->items.push_back(parse_star_expression());
    }
    return t;
  }

  ExprPtr parse_star_named_expressions_tuple() {
    const Token& start = peek();
    ExprPtr first = parse_star_named_expression();
    if (!at_op(",")) return first;
    auto t = make_expr(ExprKind::tuple, start);
    t->items.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op(":")) break;
      t->items.push_back(parse_star_named_expression());
    }
    return t;
  }

  ExprPtr parse_star_expression() {
    if (at_op("*")) {
      const Token& star = take();
      auto s = make_expr(ExprKind::starred, star);
      s->items.push_back(parse_bitwise_or());
      return s;
    }
    return parse_expression();
  }

  ExprPtr parse_star_named_expression() {
    if (at_op("*")) {
      const Token& star = take();
      auto s = make_expr(ExprKind::starred, star);
      s->items.push_back(parse_bitwise_or());
      return s;
    }
    return parse_named_expression();
  }

  ExprPtr parse_named_expression() {
    if (at(TokenKind::name) && at_op(":=", 1)) {
      const Token& name = peek();
      if (is_keyword(name.text)) fail(name, "cannot use assignment expressions with " + name.text);
      auto target = make_expr(ExprKind::name, take());
      target->text = name.text;
      const Token& op = take();
      auto n = make_expr(ExprKind::named, op);
      n->line = target->line;
      n->col = target->col;
      n->items.push_back(std::move(target));
      n->items.push_back(parse_expression());
      return n;
    }
    ExprPtr e = parse_expression();
    if (at_op(":=")) fail_at(*e, "cannot use assignment expressions with " + describe(*e));
    return e;
  }

  ExprPtr parse_expression() {
    if (at_kw("lambda")) return parse_lambda();
    ExprPtr body = parse_disjunction();
    if (at_kw("if")) {
      const Token& t = take();
      auto e = make_expr(ExprKind::if_exp, *body);
      (void)t;
      ExprPtr test = parse_disjunction();
      if (!at_kw("else")) fail(peek(), "expected 'else' after 'if' expression");
      take();
      ExprPtr orelse = parse_expression();
      e->items.push_back(std::move(body));
      e->items.push_back(std::move(test));
      e->items.push_back(std::move(orelse));
      return e;
    }
    return body;
  }

  ExprPtr parse_lambda() {
    const Token& t = take();
    auto e = make_expr(ExprKind::lambda, t);
    e->params = parse_params(":", false);
    expect_op(":");
    e->items.push_back(parse_expression());
    return e;
  }

  ExprPtr parse_disjunction() {
    ExprPtr left = parse_conjunction();
    if (!at_kw("or")) return left;
    auto e = make_expr(ExprKind::bool_op, *left);
    e->text = "or";
    e->items.push_back(std::move(left));
    while (at_kw("or")) {
      take();
      e->items.push_back(parse_conjunction());
    }
    return e;
  }

  ExprPtr parse_conjunction() {
    ExprPtr left = parse_inversion();
    if (!at_kw("and")) return left;
    auto e = make_expr(ExprKind::bool_op, *left);
    e->text = "and";
    e->items.push_back(std::move(left));
    while (at_kw("and")) {
      take();
      e->items.push_back(parse_inversion());
    }
    return e;
  }

  ExprPtr parse_inversion() {
    if (at_kw("not")) {
      const Token& t = take();
      auto e = make_expr(ExprKind::unary_op, t);
      e->text = "not";
      e->items.push_back(parse_inversion());
      return e;
    }
    return parse_comparison();
  }

  std::optional<std::string> compare_op() const {
    const Token& t = peek();
    if (t.kind == TokenKind::op &&
        (t.text == "==" || t.text == "!=" || t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">="))
      return t.text;
    if (at_kw("in")) return "in";
    if (at_kw("not") && at_kw("in", 1)) return "not in";
    if (at_kw("is")) return at_kw("not", 1) ? "is not" : "is";
    return std::nullopt;
  }

  ExprPtr parse_comparison() {
    ExprPtr left = parse_bitwise_or();
    auto op = compare_op();
    if (!op) return left;
    auto e = make_expr(ExprKind::compare, *left);
    e->items.push_back(std::move(left));
    while ((op = compare_op())) {
      take();
      if (*op == "not in" || *op == "is not") take();
      e->ops.push_back(*op);
      e->values.push_back(parse_bitwise_or());
    }
    return e;
  }

  template <typename Next>
  ExprPtr parse_binary(std::initializer_list<std::string_view> ops, Next next) {
    ExprPtr left = (this->*next)();
    while (true) {
      const Token& t = peek();
      if (t.kind != TokenKind::op || std::find(ops.begin(), ops.end(), t.text) == ops.end()) return left;
      take();
      auto e = make_expr(ExprKind::bin_op, *left);
      e->text = t.text;
      e->items.push_back(std::move(left));
      e->items.push_back((this->*next)());
      left = std::move(e);
    }
  }

  ExprPtr parse_bitwise_or() { return parse_binary({"|"}, &Parser::parse_bitwise_xor); }
  ExprPtr parse_bitwise_xor() { return parse_binary({"^"}, &Parser::parse_bitwise_and); }
  ExprPtr parse_bitwise_and() { return parse_binary({"&"}, &Parser::parse_shift); }
  ExprPtr parse_shift() { return parse_binary({"<<", ">>"}, &Parser::parse_sum); }
  ExprPtr parse_sum() { return parse_binary({"+", "-"}, &Parser::parse_term); }
  ExprPtr parse_term() { return parse_binary({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

  ExprPtr parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token& t = take();
      auto e = make_expr(ExprKind::unary_op, t);
      e->text = t.text;
      e->items.push_back(parse_factor());
      return e;
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base;
    if (at_kw("await")) {
      const Token& t = take();
      base = make_expr(ExprKind::await_expr, t);
      base->items.push_back(parse_primary());
    } else {
      base = parse_primary();
    }
    if (at_op("**")) {
      const Token& t = take();
      auto e = make_expr(ExprKind::bin_op, *base);
      (void)t;
      e->text = "**";
      e->items.push_back(std::move(base));
      e->items.push_back(parse_factor());
      return e;
    }
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      if (at_op(".")) {
        take();
        auto a = make_expr(ExprKind::attribute, *e);
        a->text = expect_name();
        a->items.push_back(std::move(e));
        e = std::move(a);
      } else if (at_op("(")) {
        take();
        auto c = make_expr(ExprKind::call, *e);
        c->items.push_back(std::move(e));
        parse_call_arguments(*c);
        e = std::move(c);
      } else if (at_op("[")) {
        take();
        auto s = make_expr(ExprKind::subscript, *e);
        s->items.push_back(std::move(e));
        s->items.push_back(parse_slices());
        expect_op("]");
        e = std::move(s);
      } else {
        return e;
      }
    }
  }

  // Consumes arguments and the closing parenthesis.
  void parse_call_arguments(Expr& call) {
    bool seen_keyword = false;
    bool seen_double = false;
    std::set<std::string> keywords;
    std::size_t count = 0;
    bool has_bare_genexp = false;
    while (!at_op(")")) {
      const Token& t = peek();
      ++count;
      if (at_op("*")) {
        take();
        if (seen_double) fail(t, "iterable argument unpacking follows keyword argument unpacking");
        auto s = make_expr(ExprKind::starred, t);
        s->items.push_back(parse_expression());
        call.items.push_back(std::move(s));
      } else if (at_op("**")) {
        take();
        seen_double = true;
        auto s = make_expr(ExprKind::double_starred, t);
        s->items.push_back(parse_expression());
        call.items.push_back(std::move(s));
      } else if (at(TokenKind::name) && at_op("=", 1)) {
        if (is_keyword(t.text)) {
          if (t.text == "True" || t.text == "False" || t.text == "None")
            fail(t, "cannot assign to " + t.text);
          unexpected();
        }
        take();
        take();
        if (!keywords.insert(t.text).second) fail(t, "keyword argument repeated: " + t.text);
        seen_keyword = true;
        auto k = make_expr(ExprKind::keyword, t);
        k->text = t.text;
        k->items.push_back(parse_expression());
        call.items.push_back(std::move(k));
      } else {
        ExprPtr arg = parse_named_expression();
        if (at_op("=")) fail_at(*arg, "expression cannot contain assignment, perhaps you meant \"==\"?");
        if (at_kw("for") || at_kw("async")) {
          auto g = make_expr(ExprKind::generator, *arg);
          g->items.push_back(std::move(arg));
          g->generators = parse_comprehension_clauses();
          arg = std::move(g);
          has_bare_genexp = true;
        }
        if (seen_double) fail_at(*arg, "positional argument follows keyword argument unpacking");
        if (seen_keyword) fail_at(*arg, "positional argument follows keyword argument");
        call.items.push_back(std::move(arg));
      }
      if (!at_op(",")) break;
      take();
    }
    if (has_bare_genexp && count > 1) fail(peek(), "Generator expression must be parenthesized");
    expect_op(")");
  }

  ExprPtr parse_slices() {
    const Token& start = peek();
    ExprPtr first = parse_slice();
    if (!at_op(",")) return first;
    auto t = make_expr(ExprKind::tuple, start);
    t->items.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op("]")) break;
      t->items.push_back(parse_slice());
    }
    return t;
  }

  ExprPtr parse_slice() {
    const Token& start = peek();
    ExprPtr lower;
    if (!at_op(":")) {
      if (at_op("*")) return parse_star_expression();
      lower = parse_named_expression();
      if (!at_op(":")) return lower;
    }
    auto s = make_expr(ExprKind::slice, start);
    take();
    ExprPtr upper, step;
    if (!at_op(":") && !at_op("]") && !at_op(",")) upper = parse_expression();
    if (at_op(":")) {
      take();
      if (!at_op("]") && !at_op(",")) step = parse_expression();
    }
    s->items.push_back(std::move(lower));
    s->items.push_back(std::move(upper));
    s->items.push_back(std::move(step));
    return s;
  }

  std::vector<Comprehension> parse_comprehension_clauses() {
    std::vector<Comprehension> gens;
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      Comprehension c;
      if (at_kw("async")) {
        take();
        c.is_async = true;
      }
      take();
      c.target = parse_target_list();
      validate_target(*c.target, TargetUse::assign);
      expect_kw("in");
      c.iter = parse_disjunction();
      while (at_kw("if")) {
        take();
        c.ifs.push_back(parse_disjunction());
      }
      gens.push_back(std::move(c));
    }
    return gens;
  }

  ExprPtr parse_yield() {
    const Token& t = take();
    if (at_kw("from")) {
      take();
      auto e = make_expr(ExprKind::yield_from, t);
      e->items.push_back(parse_expression());
      return e;
    }
    auto e = make_expr(ExprKind::yield_expr, t);
    bool bare = at_op(")") || at_op("]") || at_op("}") || at_op("=") || at_op(";") || at(TokenKind::newline) ||
                at(TokenKind::end);
    if (!bare) e->items.push_back(parse_star_expressions());
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::name: {
        if (t.text == "True" || t.text == "False") {
          auto e = make_expr(ExprKind::constant, take());
          e->const_kind = ConstKind::boolean;
          e->text = t.text;
          return e;
        }
        if (t.text == "None") {
          auto e = make_expr(ExprKind::constant, take());
          e->const_kind = ConstKind::none;
          e->text = t.text;
          return e;
        }
        if (is_keyword(t.text)) unexpected();
        auto e = make_expr(ExprKind::name, take());
        e->text = t.text;
        return e;
      }
      case TokenKind::number: {
        auto e = make_expr(ExprKind::constant, take());
        e->text = t.text;
        char last = t.text.back();
        bool is_hex = t.text.size() > 1 && (t.text[1] == 'x' || t.text[1] == 'X');
        if (last == 'j' || last == 'J') e->const_kind = ConstKind::imaginary;
        else if (!is_hex && t.text.find_first_of(".eE") != std::string::npos) e->const_kind = ConstKind::floating;
        else e->const_kind = ConstKind::integer;
        return e;
      }
      case TokenKind::string:
        return parse_strings();
      case TokenKind::op:
        if (t.text == "(") return parse_group();
        if (t.text == "[") return parse_list();
        if (t.text == "{") return parse_brace();
        if (t.text == "...") {
          auto e = make_expr(ExprKind::constant, take());
          e->const_kind = ConstKind::ellipsis;
          e->text = "...";
          return e;
        }
        unexpected();
      default:
        unexpected();
    }
  }

  ExprPtr parse_strings() {
    const Token& first = peek();
    auto e = make_expr(ExprKind::constant, first);
    bool any_bytes = false, any_text = false, any_f = false;
    while (at(TokenKind::string)) {
      const Token& t = take();
      std::size_t q = t.text.find_first_of("'\"");
      std::string prefix = t.text.substr(0, q);
      bool is_bytes = prefix.find_first_of("bB") != std::string::npos;
      bool is_f = prefix.find_first_of("fF") != std::string::npos;
      (is_bytes ? any_bytes : any_text) = true;
      any_f = any_f || is_f;
      if (!e->text.empty()) e->text += ' ';
      e->text += t.text;
    }
    if (any_bytes && any_text) fail(first, "cannot mix bytes and nonbytes literals");
    if (any_f) {
      e->kind = ExprKind::fstring;
      e->const_kind = ConstKind::string;
    } else {
      e->const_kind = any_bytes ? ConstKind::bytes : ConstKind::string;
    }
    return e;
  }

  ExprPtr parse_group() {
    const Token& open = take();
    if (at_op(")")) {
      take();
      auto t = make_expr(ExprKind::tuple, open);
      t->parenthesized = true;
      return t;
    }
    if (at_kw("yield")) {
      ExprPtr y = parse_yield();
      expect_op(")");
      y->parenthesized = true;
      return y;
    }
    ExprPtr first = parse_star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == ExprKind::starred) fail_at(*first, "iterable unpacking cannot be used in comprehension");
      auto g = make_expr(ExprKind::generator, open);
      g->items.push_back(std::move(first));
      g->generators = parse_comprehension_clauses();
      expect_op(")");
      g->parenthesized = true;
      return g;
    }
    if (at_op(")")) {
      take();
      if (first->kind == ExprKind::starred) fail_at(*first, "cannot use starred expression here");
      first->parenthesized = true;
      return first;
    }
    auto t = make_expr(ExprKind::tuple, open);
    t->items.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op(")")) break;
      t->items.push_back(parse_star_named_expression());
    }
    expect_op(")");
    t->parenthesized = true;
    return t;
  }

  ExprPtr parse_list() {
    const Token& open = take();
    auto l = make_expr(ExprKind::list, open);
    if (at_op("]")) {
      take();
      return l;
    }
    ExprPtr first = parse_star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == ExprKind::starred) fail_at(*first, "iterable unpacking cannot be used in comprehension");
      l->kind = ExprKind::list_comp;
      l->items.push_back(std::move(first));
      l->generators = parse_comprehension_clauses();
      expect_op("]");
      return l;
    }
    l->items.push_back(std::move(first));
    while (at_op(",")) {
      take();
      if (at_op("]")) break;
      l->items.push_back(parse_star_named_expression());
    }
    expect_op("]");
    return l;
  }

  ExprPtr parse_brace() {
    const Token& open = take();
    auto d = make_expr(ExprKind::dict, open);
    if (at_op("}")) {
      take();
      return d;
    }
    bool is_dict;
    if (at_op("**")) {
      is_dict = true;
    } else {
      ExprPtr first = parse_star_named_expression();
      if (at_op(":") && first->kind != ExprKind::starred) {
        is_dict = true;
        take();
        ExprPtr value = parse_expression();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          d->kind = ExprKind::dict_comp;
          d->items.push_back(std::move(first));
          d->items.push_back(std::move(value));
          d->generators = parse_comprehension_clauses();
          expect_op("}");
          return d;
        }
        d->items.push_back(std::move(first));
        d->values.push_back(std::move(value));
        if (!at_op(",")) {
          expect_op("}");
          return d;
        }
        take();
      } else {
        is_dict = false;
        d->kind = ExprKind::set;
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          if (first->kind == ExprKind::starred) fail_at(*first, "iterable unpacking cannot be used in comprehension");
          d->kind = ExprKind::set_comp;
          d->items.push_back(std::move(first));
          d->generators = parse_comprehension_clauses();
          expect_op("}");
          return d;
        }
        d->items.push_back(std::move(first));
        while (at_op(",")) {
          take();
          if (at_op("}")) break;
          d->items.push_back(parse_star_named_expression());
        }
        expect_op("}");
        return d;
      }
    }
    if (is_dict) {
      while (!at_op("}")) {
        if (at_op("**")) {
          take();
          d->items.push_back(nullptr);
          d->values.push_back(parse_bitwise_or());
        } else {
          d->items.push_back(parse_expression());
          expect_op(":");
          d->values.push_back(parse_expression());
        }
        if (!at_op(",")) break;
        take();
      }
      expect_op("}");
    }
    return d;
  }
};

// ---- compile-time checks --------------------------------------------------

struct Scope {
  enum Kind { module, function, klass, lambda } kind = module;
  bool is_async = false;
  std::set<std::string> bound;
  std::set<std::string> globals;
  std::set<std::string> params;
  bool has_yield = false;
  Scope* parent = nullptr;
};

void collect_target_names(const Expr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case ExprKind::name: out.insert(e.text); break;
    case ExprKind::tuple:
    case ExprKind::list:
      for (const auto& i : e.items) collect_target_names(*i, out);
      break;
    case ExprKind::starred: collect_target_names(*e.items[0], out); break;
    default: break;
  }
}

// Names bound directly in a scope's body (not nested scopes).
void collect_bindings(const Block& body, std::set<std::string>& out);

void collect_expr_bindings(const Expr* e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::named) out.insert(e->items[0]->text);
  if (e->kind == ExprKind::lambda) return;
  for (const auto& i : e->items) collect_expr_bindings(i.get(), out);
  for (const auto& v : e->values) collect_expr_bindings(v.get(), out);
  for (const auto& g : e->generators) {
    collect_expr_bindings(g.iter.get(), out);
    for (const auto& c : g.ifs) collect_expr_bindings(c.get(), out);
  }
}

void collect_bindings(const Block& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    for (const auto& t : s->targets) {
      if (s->kind != StmtKind::del) collect_target_names(*t, out);
    }
    collect_expr_bindings(s->value.get(), out);
    switch (s->kind) {
      case StmtKind::function_def:
      case StmtKind::class_def: out.insert(s->text); continue;
      case StmtKind::import_stmt:
      case StmtKind::import_from:
        for (const auto& a : s->aliases) {
          if (a.name == "*") continue;
          out.insert(!a.asname.empty() ? a.asname : a.name.substr(0, a.name.find('.')));
        }
        break;
      default: break;
    }
    for (const auto& w : s->with_items) {
      if (w.target) collect_target_names(*w.target, out);
    }
    for (const auto& h : s->handlers) {
      if (!h.name.empty()) out.insert(h.name);
      collect_bindings(h.body, out);
    }
    collect_bindings(s->body, out);
    collect_bindings(s->orelse, out);
    collect_bindings(s->finalbody, out);
    for (const auto& c : s->cases) collect_bindings(c.body, out);
  }
}

class Checker {
 public:
  void check_module(const Module& m) {
    Scope scope;
    scope.kind = Scope::module;
    collect_bindings(m.body, scope.bound);
    check_block(m.body, scope, false);
  }

 private:
  [[noreturn]] void fail(int line, int col, std::string message) {
    throw ParseFailure{{line, col, std::move(message)}};
  }

  void check_block(const Block& body, Scope& scope, bool in_loop) {
    for (const auto& s : body) check_stmt(*s, scope, in_loop);
  }

  void check_function(const std::vector<Param>& params, const Block* body, const Expr* lambda_body, bool is_async,
                      Scope& parent, Scope::Kind kind) {
    Scope scope;
    scope.kind = kind;
    scope.is_async = is_async;
    scope.parent = &parent;
    for (const auto& p : params) {
      scope.bound.insert(p.name);
      scope.params.insert(p.name);
    }
    if (body) {
      collect_bindings(*body, scope.bound);
      check_block(*body, scope, false);
      if (scope.is_async && scope.has_yield) {
        for (const auto& s : *body) check_async_gen_returns(*s);
      }
    }
    if (lambda_body) {
      collect_expr_bindings(lambda_body, scope.bound);
      check_expr(*lambda_body, scope);
    }
  }

  void check_async_gen_returns(const Stmt& s) {
    if (s.kind == StmtKind::function_def || s.kind == StmtKind::class_def) return;
    if (s.kind == StmtKind::return_stmt && s.value)
      fail(s.line, s.col, "'return' with value in async generator");
    for (const auto* b : {&s.body, &s.orelse, &s.finalbody}) {
      for (const auto& c : *b) check_async_gen_returns(*c);
    }
    for (const auto& h : s.handlers) {
      for (const auto& c : h.body) check_async_gen_returns(*c);
    }
  }

  void check_params(const std::vector<Param>& params, Scope& scope) {
    for (const auto& p : params) {
      if (p.annotation) check_expr(*p.annotation, scope);
      if (p.default_value) check_expr(*p.default_value, scope);
    }
  }

  void check_stmt(const Stmt& s, Scope& scope, bool in_loop) {
    auto expr = [&](const ExprPtr& e) {
      if (e) check_expr(*e, scope);
    };
    switch (s.kind) {
      case StmtKind::return_stmt:
        if (scope.kind != Scope::function) fail(s.line, s.col, "'return' outside function");
        break;
      case StmtKind::break_stmt:
        if (!in_loop) fail(s.line, s.col, "'break' outside loop");
        break;
      case StmtKind::continue_stmt:
        if (!in_loop) fail(s.line, s.col, "'continue' not properly in loop");
        break;
      case StmtKind::global_stmt:
        for (const auto& n : s.names) {
          if (scope.params.count(n)) fail(s.line, s.col, "name '" + n + "' is parameter and global");
          scope.globals.insert(n);
        }
        break;
      case StmtKind::nonlocal_stmt:
        if (scope.kind == Scope::module) fail(s.line, s.col, "nonlocal declaration not allowed at module level");
        for (const auto& n : s.names) {
          if (scope.params.count(n)) fail(s.line, s.col, "name '" + n + "' is parameter and nonlocal");
          bool found = false;
          for (Scope* p = scope.parent; p; p = p->parent) {
            if (p->kind == Scope::function || p->kind == Scope::lambda) {
              if (p->bound.count(n) && !p->globals.count(n)) {
                found = true;
                break;
              }
            }
          }
          if (!found) fail(s.line, s.col, "no binding for nonlocal '" + n + "' found");
        }
        break;
      case StmtKind::import_from:
        for (const auto& a : s.aliases) {
          if (a.name == "*" && scope.kind != Scope::module)
            fail(s.line, s.col, "import * only allowed at module level");
        }
        if (s.text == "__future__") {
          for (const auto& a : s.aliases) {
            static const std::set<std::string> known = {"nested_scopes", "generators", "division", "absolute_import",
                                                        "with_statement", "print_function", "unicode_literals",
                                                        "barry_as_FLUFL", "generator_stop", "annotations"};
            if (!known.count(a.name)) fail(s.line, s.col, "future feature " + a.name + " is not defined");
          }
        }
        break;
      case StmtKind::function_def:
        for (const auto& d : s.decorators) expr(d);
        check_params(s.params, scope);
        expr(s.extra);
        check_function(s.params, &s.body, nullptr, s.is_async, scope, Scope::function);
        return;
      case StmtKind::class_def: {
        for (const auto& d : s.decorators) expr(d);
        for (const auto& b : s.bases) expr(b);
        Scope cls;
        cls.kind = Scope::klass;
        cls.parent = &scope;
        collect_bindings(s.body, cls.bound);
        check_block(s.body, cls, false);
        return;
      }
      case StmtKind::for_stmt:
        if (s.is_async && !(scope.kind == Scope::function && scope.is_async))
          fail(s.line, s.col, "'async for' outside async function");
        for (const auto& t : s.targets) expr(t);
        expr(s.value);
        check_block(s.body, scope, true);
        check_block(s.orelse, scope, in_loop);
        return;
      case StmtKind::while_stmt:
        expr(s.value);
        check_block(s.body, scope, true);
        check_block(s.orelse, scope, in_loop);
        return;
      case StmtKind::with_stmt:
        if (s.is_async && !(scope.kind == Scope::function && scope.is_async))
          fail(s.line, s.col, "'async with' outside async function");
        for (const auto& w : s.with_items) {
          expr(w.context);
          expr(w.target);
        }
        check_block(s.body, scope, in_loop);
        return;
      default:
        break;
    }
    for (const auto& t : s.targets) expr(t);
    expr(s.value);
    expr(s.extra);
    check_block(s.body, scope, in_loop);
    check_block(s.orelse, scope, in_loop);
    for (const auto& h : s.handlers) {
      expr(h.type);
      check_block(h.body, scope, in_loop);
    }
    check_block(s.finalbody, scope, in_loop);
    for (const auto& c : s.cases) {
      expr(c.pattern);
      expr(c.guard);
      check_block(c.body, scope, in_loop);
    }
  }

  void check_expr(const Expr& e, Scope& scope, bool in_comprehension = false) {
    switch (e.kind) {
      case ExprKind::yield_expr:
      case ExprKind::yield_from:
        if (in_comprehension) fail(e.line, e.col, "'yield' inside comprehension");
        if (scope.kind == Scope::module || scope.kind == Scope::klass) fail(e.line, e.col, "'yield' outside function");
        if (e.kind == ExprKind::yield_from && scope.is_async)
          fail(e.line, e.col, "'yield from' inside async function");
        scope.has_yield = true;
        break;
      case ExprKind::await_expr:
        if (scope.kind == Scope::module || scope.kind == Scope::klass) fail(e.line, e.col, "'await' outside function");
        if (!scope.is_async && !in_comprehension) fail(e.line, e.col, "'await' outside async function");
        break;
      case ExprKind::lambda: {
        check_params(e.params, scope);
        check_function(e.params, nullptr, e.items[0].get(), false, scope, Scope::lambda);
        return;
      }
      case ExprKind::list_comp:
      case ExprKind::set_comp:
      case ExprKind::dict_comp:
      case ExprKind::generator: {
        for (std::size_t i = 0; i < e.generators.size(); ++i) {
          const auto& g = e.generators[i];
          check_expr(*g.iter, scope, i > 0 || in_comprehension);
          check_expr(*g.target, scope, true);
          for (const auto& c : g.ifs) check_expr(*c, scope, true);
        }
        for (const auto& i : e.items) check_expr(*i, scope, true);
        return;
      }
      default:
        break;
    }
    for (const auto& i : e.items) {
      if (i) check_expr(*i, scope, in_comprehension);
    }
    for (const auto& v : e.values) {
      if (v) check_expr(*v, scope, in_comprehension);
    }
  }
};

}  // namespace

ParseResult parse_module(std::string_view source) {
  ParseResult result;
  result.tokens = tokenize(source);
  std::optional<Diagnostic> parse_error;
  std::optional<Module> module;
  try {
    Parser parser(result.tokens.tokens);
    module = parser.parse_file();
    Checker().check_module(*module);
  } catch (const ParseFailure& failure) {
    parse_error = failure.diagnostic;
    module.reset();
  }
  const auto& lex_error = result.tokens.error;
  if (lex_error && (!parse_error || parse_error->line >= lex_error->line)) {
    result.error = lex_error;
  } else {
    result.error = parse_error;
  }
  if (!result.error) result.module = std::move(module);
  return result;
}

}  // namespace pips::py
