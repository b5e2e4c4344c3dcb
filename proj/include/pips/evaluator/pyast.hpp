#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pips/evaluator/pytokens.hpp"

namespace pips::py {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

enum class ExprKind {
  name,
  constant,
  fstring,
  bool_op,     // text = "and" | "or"; items = operands
  bin_op,      // text = operator; items = {left, right}
  unary_op,    // text = "-", "+", "~", "not"; items = {operand}
  compare,     // items = {left}; ops/values = comparators
  lambda,      // params; items = {body}
  if_exp,      // items = {body, test, orelse}
  dict,        // items = keys (null for ** entries), values
  set,
  list,
  tuple,
  list_comp,   // items = {element}; generators
  set_comp,
  dict_comp,   // items = {key, value}; generators
  generator,
  await_expr,  // items = {value}
  yield_expr,  // items = {} or {value}
  yield_from,  // items = {value}
  call,        // items = {func, args...}; args may be starred, keyword, double_starred
  attribute,   // items = {value}; text = attribute name
  subscript,   // items = {value, index}
  slice,       // items = {lower, upper, step}, any may be null
  starred,     // items = {value}
  named,       // items = {target, value}
  keyword,     // text = argument name; items = {value}
  double_starred,
};

enum class ConstKind { none, boolean, integer, floating, imaginary, string, bytes, ellipsis };

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
  bool is_async = false;
};

enum class ParamKind { positional_only, normal, var_positional, keyword_only, var_keyword };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::normal;
  ExprPtr annotation;
  ExprPtr default_value;
};

struct Expr {
  ExprKind kind = ExprKind::name;
  int line = 0;
  int col = 0;
  std::string text;  // identifier, operator, attribute, keyword name or literal source
  ConstKind const_kind = ConstKind::none;
  std::vector<ExprPtr> items;
  std::vector<ExprPtr> values;
  std::vector<std::string> ops;
  std::vector<Comprehension> generators;
  std::vector<Param> params;
  bool parenthesized = false;
};

enum class StmtKind {
  expr,
  assign,       // targets = chain of targets; value
  aug_assign,   // targets = {target}; text = operator; value
  ann_assign,   // targets = {target}; extra = annotation; value may be null
  del,
  pass,
  break_stmt,
  continue_stmt,
  return_stmt,  // value may be null
  raise_stmt,   // value = exception, extra = cause
  global_stmt,
  nonlocal_stmt,
  import_stmt,
  import_from,  // text = module (may be empty), level = leading dots
  assert_stmt,  // value = test, extra = message
  if_stmt,      // value = test; body; orelse
  while_stmt,
  for_stmt,     // targets = {target}; value = iterable; body; orelse
  try_stmt,     // body; handlers; orelse; finalbody
  with_stmt,    // with_items; body
  function_def, // text = name; params; decorators; extra = return annotation; body
  class_def,    // text = name; bases (call-style args); decorators; body
  match_stmt,   // value = subject; cases
};

struct ExceptHandler {
  int line = 0;
  ExprPtr type;
  std::string name;
  Block body;
};

struct WithItem {
  ExprPtr context;
  ExprPtr target;
};

struct MatchCase {
  int line = 0;
  ExprPtr pattern;
  ExprPtr guard;
  Block body;
};

struct Alias {
  std::string name;  // dotted module or imported name, or "*"
  std::string asname;
};

struct Stmt {
  StmtKind kind = StmtKind::pass;
  int line = 0;
  int col = 0;
  int end_line = 0;
  std::string text;
  bool is_async = false;
  int level = 0;
  std::vector<ExprPtr> targets;
  ExprPtr value;
  ExprPtr extra;
  std::vector<std::string> names;
  std::vector<Alias> aliases;
  std::vector<Param> params;
  std::vector<ExprPtr> decorators;
  std::vector<ExprPtr> bases;
  Block body;
  Block orelse;
  Block finalbody;
  std::vector<ExceptHandler> handlers;
  std::vector<WithItem> with_items;
  std::vector<MatchCase> cases;
};

struct Module {
  Block body;
};

struct ParseResult {
  std::optional<Module> module;  // absent when a diagnostic was raised
  std::optional<Diagnostic> error;
  TokenStream tokens;
};

// Parses a module and runs the compile-time checks the reference interpreter
// applies before execution (return/yield outside function, break outside
// loop, duplicate arguments, and so on). Never throws.
ParseResult parse_module(std::string_view source);

}  // namespace pips::py
