#include "pips/evaluator/trivial.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace pips::py {
namespace {

// literal: plain literals and copies of them; computed: derived from literals
// through some operation; unknown: may depend on the input.
enum class Taint { literal = 0, computed = 1, unknown = 2 };

Taint join(Taint a, Taint b) { return std::max(a, b); }
Taint at_least_computed(Taint t) { return join(t, Taint::computed); }

struct Var {
  Taint taint = Taint::unknown;
  bool container = false;
};

using Env = std::map<std::string, Var>;

const std::set<std::string, std::less<>> kDynamic = {"exec",    "eval",    "globals", "locals",  "vars",
                                                     "setattr", "delattr", "compile", "__import__"};

const std::set<std::string, std::less<>> kPureBuiltins = {
    "abs",  "all",   "any",   "bool",  "dict",  "divmod", "float",  "frozenset", "int",   "len",
    "list", "max",   "min",   "pow",   "range", "reversed", "round", "set",      "sorted", "str",
    "sum",  "tuple", "zip",   "enumerate", "chr", "ord",  "hex",    "oct",       "bin"};

bool is_container_expr(ExprKind kind) {
  switch (kind) {
    case ExprKind::list:
    case ExprKind::dict:
    case ExprKind::set:
    case ExprKind::list_comp:
    case ExprKind::set_comp:
    case ExprKind::dict_comp:
      return true;
    default:
      return false;
  }
}

bool fstring_has_fields(const std::string& text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    if (i + 1 < text.size() && text[i + 1] == '{') {
      ++i;
      continue;
    }
    return true;
  }
  return false;
}

// Literal-only expressions used for module-level constants.
std::optional<Taint> literal_value(const Expr& e) {
  switch (e.kind) {
    case ExprKind::constant:
      return Taint::literal;
    case ExprKind::unary_op: {
      auto inner = literal_value(*e.items[0]);
      if (!inner) return std::nullopt;
      bool signed_number = (e.text == "-" || e.text == "+") && e.items[0]->kind == ExprKind::constant;
      return signed_number ? *inner : at_least_computed(*inner);
    }
    case ExprKind::bin_op: {
      auto l = literal_value(*e.items[0]);
      auto r = literal_value(*e.items[1]);
      if (!l || !r) return std::nullopt;
      return Taint::computed;
    }
    case ExprKind::list:
    case ExprKind::tuple:
    case ExprKind::set:
    case ExprKind::dict: {
      Taint t = Taint::literal;
      for (const auto& i : e.items) {
        if (!i) return std::nullopt;
        auto v = literal_value(*i);
        if (!v) return std::nullopt;
        t = join(t, *v);
      }
      for (const auto& i : e.values) {
        auto v = literal_value(*i);
        if (!v) return std::nullopt;
        t = join(t, *v);
      }
      return t;
    }
    default:
      return std::nullopt;
  }
}

class TrivialityAnalysis {
 public:
  TrivialityAnalysis(const Module& module, const Stmt& entry) : module_(module), entry_(entry) {}

  bool run() {
    seed_module_constants();
    Env env = module_env_;
    for (const auto& p : entry_.params) env[p.name] = {Taint::unknown, true};
    if (!entry_.decorators.empty()) return false;
    exec_block(entry_.body, env, Taint::literal);
    if (aborted_ || returns_.empty()) return false;
    Taint worst = Taint::literal;
    for (Taint t : returns_) worst = join(worst, t);
    if (worst == Taint::unknown) return false;
    if (entry_.params.empty()) return worst == Taint::literal;
    return true;
  }

 private:
  const Module& module_;
  const Stmt& entry_;
  Env module_env_;
  std::set<std::string> module_names_;
  std::vector<Taint> returns_;
  bool aborted_ = false;

  void seed_module_constants() {
    std::map<std::string, int> assignments;
    std::map<std::string, Var> candidates;
    for (const auto& s : module_.body) {
      if ((s->kind == StmtKind::assign || s->kind == StmtKind::ann_assign) && s->value && s->targets.size() == 1 &&
          s->targets[0]->kind == ExprKind::name) {
        const std::string& name = s->targets[0]->text;
        ++assignments[name];
        if (auto t = literal_value(*s->value)) candidates[name] = {*t, is_container_expr(s->value->kind)};
      }
      std::set<std::string> bound;
      collect_statement_names(*s, bound);
      for (const auto& n : bound) {
        module_names_.insert(n);
        if (s->kind != StmtKind::assign && s->kind != StmtKind::ann_assign) assignments[n] += 2;
      }
    }
    for (const auto& [name, var] : candidates) {
      if (assignments[name] == 1) module_env_[name] = var;
    }
  }

  static void collect_target(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::name) out.insert(e.text);
    if (e.kind == ExprKind::tuple || e.kind == ExprKind::list) {
      for (const auto& i : e.items) collect_target(*i, out);
    }
    if (e.kind == ExprKind::starred) collect_target(*e.items[0], out);
  }

  static void collect_statement_names(const Stmt& s, std::set<std::string>& out) {
    for (const auto& t : s.targets) collect_target(*t, out);
    if (s.kind == StmtKind::function_def || s.kind == StmtKind::class_def) out.insert(s.text);
    if (s.kind == StmtKind::import_stmt || s.kind == StmtKind::import_from) {
      for (const auto& a : s.aliases) out.insert(!a.asname.empty() ? a.asname : a.name.substr(0, a.name.find('.')));
    }
  }

  void taint_containers(Env& env) {
    for (auto& [name, var] : env) {
      if (var.container) var.taint = Taint::unknown;
    }
  }

  static Env join_env(const Env& a, const Env& b) {
    Env out = a;
    for (const auto& [name, var] : b) {
      auto it = out.find(name);
      if (it == out.end()) {
        out[name] = var;
      } else {
        it->second.taint = join(it->second.taint, var.taint);
        it->second.container = it->second.container || var.container;
      }
    }
    return out;
  }

  void bind(const Expr& target, Taint t, bool container, Env& env) {
    switch (target.kind) {
      case ExprKind::name:
        env[target.text] = {t, container};
        break;
      case ExprKind::tuple:
      case ExprKind::list:
        for (const auto& i : target.items) bind(*i, t, true, env);
        break;
      case ExprKind::starred:
        bind(*target.items[0], t, true, env);
        break;
      case ExprKind::attribute:
      case ExprKind::subscript: {
        // Store into an object: the root variable absorbs the value.
        Taint extra = t;
        const Expr* root = &target;
        while (root->kind == ExprKind::attribute || root->kind == ExprKind::subscript) {
          if (root->kind == ExprKind::subscript) extra = join(extra, eval(*root->items[1], env));
          root = root->items[0].get();
        }
        if (extra == Taint::unknown) taint_containers(env);
        if (root->kind == ExprKind::name) {
          auto it = env.find(root->text);
          if (it != env.end()) it->second.taint = join(it->second.taint, at_least_computed(extra));
        }
        break;
      }
      default:
        aborted_ = true;
    }
  }

  Taint lookup(const std::string& name, const Env& env) {
    if (kDynamic.count(name)) {
      aborted_ = true;
      return Taint::unknown;
    }
    auto it = env.find(name);
    if (it != env.end()) return it->second.taint;
    return Taint::unknown;
  }

  bool is_shadowed(const std::string& name, const Env& env) const {
    return env.count(name) > 0 || module_names_.count(name) > 0;
  }

  Taint eval_comprehension(const Expr& e, const Env& outer) {
    Env env = outer;
    Taint t = Taint::computed;
    for (const auto& g : e.generators) {
      Taint iter = eval(*g.iter, env);
      t = join(t, iter);
      bind(*g.target, iter, false, env);
      for (const auto& c : g.ifs) t = join(t, eval(*c, env));
    }
    for (const auto& i : e.items) t = join(t, eval(*i, env));
    return t;
  }

  Taint eval_call(const Expr& e, Env& env) {
    const Expr& func = *e.items[0];
    Taint args = Taint::literal;
    bool container_arg = false;
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const Expr& a = *e.items[i];
      const Expr& value = (a.kind == ExprKind::keyword || a.kind == ExprKind::starred ||
                           a.kind == ExprKind::double_starred)
                              ? *a.items[0]
                              : a;
      args = join(args, eval(value, env));
      if (value.kind == ExprKind::name) {
        auto it = env.find(value.text);
        if (it != env.end() && it->second.container) container_arg = true;
      }
    }
    if (func.kind == ExprKind::name) {
      if (kDynamic.count(func.text)) {
        aborted_ = true;
        return Taint::unknown;
      }
      if (kPureBuiltins.count(func.text) && !is_shadowed(func.text, env)) return at_least_computed(args);
      if (container_arg) taint_containers(env);
      return Taint::unknown;
    }
    if (func.kind == ExprKind::attribute) {
      Taint receiver = eval(*func.items[0], env);
      if (func.items[0]->kind == ExprKind::name) {
        auto it = env.find(func.items[0]->text);
        if (it != env.end() && it->second.container) {
          // Method on a local container, e.g. items.append(x).
          if (args == Taint::unknown || control_ == Taint::unknown) taint_containers(env);
          else it->second.taint = join(it->second.taint, at_least_computed(args));
          return join(at_least_computed(receiver), args);
        }
      }
      if (container_arg) taint_containers(env);
      return Taint::unknown;
    }
    eval(func, env);
    if (container_arg) taint_containers(env);
    return Taint::unknown;
  }

  Taint eval(const Expr& e, Env& env) {
    switch (e.kind) {
      case ExprKind::constant:
        return Taint::literal;
      case ExprKind::fstring:
        return fstring_has_fields(e.text) ? Taint::unknown : Taint::literal;
      case ExprKind::name:
        return lookup(e.text, env);
      case ExprKind::unary_op: {
        Taint inner = eval(*e.items[0], env);
        bool signed_number = (e.text == "-" || e.text == "+") && e.items[0]->kind == ExprKind::constant;
        return signed_number ? inner : at_least_computed(inner);
      }
      case ExprKind::bin_op:
      case ExprKind::bool_op:
      case ExprKind::if_exp:
      case ExprKind::subscript:
      case ExprKind::slice: {
        Taint t = Taint::computed;
        for (const auto& i : e.items) {
          if (i) t = join(t, eval(*i, env));
        }
        return t;
      }
      case ExprKind::compare: {
        Taint t = at_least_computed(eval(*e.items[0], env));
        for (const auto& v : e.values) t = join(t, eval(*v, env));
        return t;
      }
      case ExprKind::list:
      case ExprKind::tuple:
      case ExprKind::set:
      case ExprKind::dict: {
        Taint t = Taint::literal;
        for (const auto& i : e.items) {
          if (i) t = join(t, eval(*i, env));
        }
        for (const auto& v : e.values) t = join(t, eval(*v, env));
        return t;
      }
      case ExprKind::starred:
      case ExprKind::double_starred:
      case ExprKind::keyword:
        return eval(*e.items[0], env);
      case ExprKind::list_comp:
      case ExprKind::set_comp:
      case ExprKind::dict_comp:
      case ExprKind::generator:
        return eval_comprehension(e, env);
      case ExprKind::named: {
        Taint t = join(eval(*e.items[1], env), control_);
        bind(*e.items[0], t, is_container_expr(e.items[1]->kind), env);
        return t;
      }
      case ExprKind::call:
        return eval_call(e, env);
      case ExprKind::attribute:
        eval(*e.items[0], env);
        return Taint::unknown;
      case ExprKind::yield_expr:
      case ExprKind::yield_from:
        aborted_ = true;
        return Taint::unknown;
      case ExprKind::lambda:
      case ExprKind::await_expr:
        return Taint::unknown;
    }
    return Taint::unknown;
  }

  Taint control_ = Taint::literal;

  static bool exits_early(const Block& body) {
    for (const auto& s : body) {
      switch (s->kind) {
        case StmtKind::break_stmt:
        case StmtKind::continue_stmt:
        case StmtKind::return_stmt:
        case StmtKind::raise_stmt:
          return true;
        case StmtKind::function_def:
        case StmtKind::class_def:
          continue;
        default:
          break;
      }
      if (exits_early(s->body) || exits_early(s->orelse) || exits_early(s->finalbody)) return true;
      for (const auto& h : s->handlers) {
        if (exits_early(h.body)) return true;
      }
      for (const auto& c : s->cases) {
        if (exits_early(c.body)) return true;
      }
    }
    return false;
  }

  void exec_block(const Block& body, Env& env, Taint control) {
    for (const auto& s : body) {
      if (aborted_) return;
      exec_stmt(*s, env, control);
    }
  }

  void exec_loop(const Stmt& s, Env& env, Taint control) {
    Taint loop_control = control;
    if (exits_early(s.body)) loop_control = Taint::unknown;
    // Iterate to a fixed point; each variable can only move up the lattice.
    for (int pass = 0; pass < 8; ++pass) {
      Env before = env;
      Taint head;
      Env body_env = env;
      if (s.kind == StmtKind::for_stmt) {
        head = eval(*s.value, body_env);
        Taint lc = join(loop_control, head);
        bind(*s.targets[0], join(head, lc), false, body_env);
        exec_block(s.body, body_env, lc);
      } else {
        head = eval(*s.value, body_env);
        Taint lc = join(loop_control, head);
        exec_block(s.body, body_env, lc);
      }
      env = join_env(env, body_env);
      if (s.kind == StmtKind::while_stmt) {
        Env probe = env;
        loop_control = join(loop_control, eval(*s.value, probe));
      }
      // Anything assigned in the body depends on how often it ran.
      for (auto& [name, var] : env) {
        auto it = before.find(name);
        if (it == before.end() || it->second.taint != var.taint) var.taint = join(var.taint, loop_control);
      }
      if (aborted_) return;
      bool stable = true;
      for (const auto& [name, var] : env) {
        auto it = before.find(name);
        if (it == before.end() || it->second.taint != var.taint) stable = false;
      }
      if (stable) break;
    }
    Env probe = env;
    Taint lc = join(loop_control, eval(*s.value, probe));
    exec_block(s.orelse, env, lc);
  }

  void exec_stmt(const Stmt& s, Env& env, Taint control) {
    Taint saved_control = control_;
    control_ = control;
    switch (s.kind) {
      case StmtKind::expr:
        eval(*s.value, env);
        break;
      case StmtKind::assign: {
        Taint t = join(eval(*s.value, env), control);
        bool container = is_container_expr(s.value->kind);
        if (s.value->kind == ExprKind::name) {
          auto it = env.find(s.value->text);
          container = it != env.end() && it->second.container;
        }
        for (const auto& target : s.targets) bind(*target, t, container, env);
        break;
      }
      case StmtKind::ann_assign:
        if (s.value) {
          Taint t = join(eval(*s.value, env), control);
          bind(*s.targets[0], t, is_container_expr(s.value->kind), env);
        }
        break;
      case StmtKind::aug_assign: {
        Taint t = join(at_least_computed(eval(*s.value, env)), control);
        const Expr& target = *s.targets[0];
        if (target.kind == ExprKind::name) {
          Var& v = env[target.text];
          v.taint = join(join(v.taint, t), lookup(target.text, env));
        } else {
          bind(target, t, false, env);
        }
        break;
      }
      case StmtKind::del:
        break;
      case StmtKind::return_stmt:
        returns_.push_back(join(s.value ? eval(*s.value, env) : Taint::literal, control));
        break;
      case StmtKind::raise_stmt:
      case StmtKind::assert_stmt:
        if (s.value) eval(*s.value, env);
        break;
      case StmtKind::global_stmt:
      case StmtKind::nonlocal_stmt:
        aborted_ = true;
        break;
      case StmtKind::import_stmt:
      case StmtKind::import_from: {
        std::set<std::string> names;
        collect_statement_names(s, names);
        for (const auto& n : names) env[n] = {Taint::unknown, false};
        break;
      }
      case StmtKind::function_def:
      case StmtKind::class_def:
        env[s.text] = {Taint::unknown, false};
        break;
      case StmtKind::if_stmt: {
        Taint c = join(control, eval(*s.value, env));
        Env then_env = env;
        Env else_env = env;
        exec_block(s.body, then_env, c);
        exec_block(s.orelse, else_env, c);
        env = join_env(then_env, else_env);
        if (c == Taint::unknown) {
          for (auto& [name, var] : env) {
            auto t1 = then_env.find(name);
            auto t2 = else_env.find(name);
            bool differs = t1 == then_env.end() || t2 == else_env.end() || t1->second.taint != t2->second.taint;
            if (differs) var.taint = Taint::unknown;
          }
        }
        break;
      }
      case StmtKind::for_stmt:
      case StmtKind::while_stmt:
        exec_loop(s, env, control);
        break;
      case StmtKind::try_stmt: {
        Env body_env = env;
        exec_block(s.body, body_env, control);
        Env out = join_env(env, body_env);
        for (const auto& h : s.handlers) {
          Env handler_env = join_env(env, body_env);
          if (!h.name.empty()) handler_env[h.name] = {Taint::unknown, false};
          exec_block(h.body, handler_env, Taint::unknown);
          out = join_env(out, handler_env);
        }
        exec_block(s.orelse, body_env, control);
        out = join_env(out, body_env);
        if (!s.handlers.empty()) {
          // Assignments in the body may or may not have happened.
          for (auto& [name, var] : out) {
            auto before = env.find(name);
            auto after = body_env.find(name);
            if (before == env.end() || after == body_env.end() || before->second.taint != after->second.taint)
              var.taint = Taint::unknown;
          }
        }
        exec_block(s.finalbody, out, control);
        env = std::move(out);
        break;
      }
      case StmtKind::with_stmt:
        for (const auto& item : s.with_items) {
          eval(*item.context, env);
          if (item.target) bind(*item.target, Taint::unknown, false, env);
        }
        exec_block(s.body, env, control);
        break;
      case StmtKind::match_stmt: {
        eval(*s.value, env);
        // Which case runs is not tracked, so every case body is data dependent.
        const Taint c = Taint::unknown;
        Env out = env;
        for (const auto& mc : s.cases) {
          Env case_env = env;
          std::set<std::string> names;
          collect_pattern_names(*mc.pattern, names);
          for (const auto& n : names) case_env[n] = {c, false};
          if (mc.guard) eval(*mc.guard, case_env);
          exec_block(mc.body, case_env, c);
          out = join_env(out, case_env);
        }
        env = std::move(out);
        break;
      }
      case StmtKind::pass:
      case StmtKind::break_stmt:
      case StmtKind::continue_stmt:
        break;
    }
    control_ = saved_control;
  }

  static void collect_pattern_names(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::name && e.text != "_") out.insert(e.text);
    if (e.kind == ExprKind::attribute || e.kind == ExprKind::call) {
      for (std::size_t i = 1; i < e.items.size(); ++i) collect_pattern_names(*e.items[i], out);
      return;
    }
    for (const auto& i : e.items) {
      if (i) collect_pattern_names(*i, out);
    }
    for (const auto& v : e.values) {
      if (v) collect_pattern_names(*v, out);
    }
  }
};

}  // namespace

const Stmt* find_entry(const Module& module, std::string_view name) {
  const Stmt* found = nullptr;
  for (const auto& s : module.body) {
    if (s->kind == StmtKind::function_def && s->text == name) found = s.get();
  }
  return found;
}

bool is_trivial_entry(const Module& module, std::string_view entry_name) {
  const Stmt* entry = find_entry(module, entry_name);
  if (!entry || entry->is_async) return false;
  return TrivialityAnalysis(module, *entry).run();
}

}  // namespace pips::py
