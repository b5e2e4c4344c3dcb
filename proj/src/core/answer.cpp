#include "pips/core/answer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "pips/core/errors.hpp"

namespace pips {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string casefold(std::string s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

// "(a) or (b)" starts with '(' and ends with ')' but is not wrapped.
bool parens_wrap_whole(const std::string& s) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') {
      --depth;
      if (depth == 0 && i + 1 != s.size()) return false;
    }
  }
  return depth == 0;
}

bool unwrap_once(std::string& s) {
  if (s.size() < 2) return false;
  char open = s.front(), close = s.back();
  bool wrapped = false;
  if (open == '(' && close == ')') {
    wrapped = parens_wrap_whole(s);
  } else if ((open == '"' || open == '\'' || open == '`') && open == close) {
    wrapped = s.find(open, 1) == s.size() - 1;
  }
  if (!wrapped) return false;
  s = s.substr(1, s.size() - 2);
  return true;
}

std::string clean_text(std::string_view raw) {
  std::string s(raw);
  while (true) {
    std::string before = s;
    s = casefold(trim(s));
    if (!s.empty() && s.back() == '.') s.pop_back();
    s = trim(s);
    unwrap_once(s);
    if (s == before) return s;
  }
}

std::optional<double> parse_whole_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string drop_digit_grouping(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool grouping = s[i] == ',' && i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
                    std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if (!grouping) out.push_back(s[i]);
  }
  return out;
}

double parse_numeric_text(const std::string& cleaned) {
  std::string s = drop_digit_grouping(cleaned);
  if (auto whole = parse_whole_number(s)) return *whole;
  static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:e[-+]?\d+)?)");
  std::optional<double> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
    if (auto v = parse_whole_number(it->str())) last = v;
  }
  if (!last) throw UnparseableAnswer("no number in answer '" + cleaned + "'");
  return *last;
}

AnswerValue numeric_value(double v, const AnswerSpec& spec) {
  AnswerValue out;
  out.value = v;
  if (spec.kind == AnswerKind::integer && v == std::trunc(v) && std::fabs(v) < 0x1.0p53) {
    out.canonical_text = format_number(v == 0.0 ? 0.0 : v);
  } else {
    out.canonical_text = format_number(v);
  }
  return out;
}

std::optional<std::size_t> option_index_for_label(const std::string& t, std::size_t n) {
  if (t.size() != 1 || t[0] < 'a' || t[0] > 'z') return std::nullopt;
  std::size_t idx = static_cast<std::size_t>(t[0] - 'a');
  if (idx >= n) return std::nullopt;
  return idx;
}

AnswerValue choice_value(const std::string& cleaned, const AnswerSpec& spec) {
  const std::size_t n = spec.options.size();
  auto label = [](std::size_t i) {
    AnswerValue v;
    v.canonical_text = option_label(i);
    v.value = v.canonical_text;
    return v;
  };
  if (auto idx = option_index_for_label(cleaned, n)) return label(*idx);
  for (std::size_t i = 0; i < n; ++i) {
    if (clean_text(spec.options[i]) == cleaned) return label(i);
  }
  // "(b) blue", "b) blue", "b. blue", "b: blue"
  static const std::regex labelled(R"(^\(?([a-z])[\).:]\s*(.*)$)");
  std::smatch m;
  if (std::regex_match(cleaned, m, labelled)) {
    if (auto idx = option_index_for_label(m[1].str(), n)) {
      std::string rest = clean_text(m[2].str());
      if (rest.empty() || rest == clean_text(spec.options[*idx])) return label(*idx);
    }
  }
  AnswerValue v;
  v.value = cleaned;
  v.canonical_text = cleaned;
  return v;
}

AnswerValue boolean_value(const std::string& cleaned) {
  AnswerValue v;
  if (cleaned == "true" || cleaned == "yes" || cleaned == "1" || cleaned == "t" || cleaned == "y") {
    v.value = true;
    v.canonical_text = "true";
  } else if (cleaned == "false" || cleaned == "no" || cleaned == "0" || cleaned == "f" || cleaned == "n") {
    v.value = false;
    v.canonical_text = "false";
  } else {
    v.value = cleaned;
    v.canonical_text = cleaned;
  }
  return v;
}

}  // namespace

std::string format_number(double value) {
  if (value == std::trunc(value) && std::fabs(value) < 1e15) {
    long long as_int = static_cast<long long>(value);
    return std::to_string(as_int);
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string option_label(std::size_t index) {
  return std::string(1, static_cast<char>('a' + static_cast<int>(index % 26)));
}

AnswerValue normalize_answer(std::string_view raw, const AnswerSpec& spec) {
  std::string cleaned = clean_text(raw);
  switch (spec.kind) {
    case AnswerKind::integer:
    case AnswerKind::decimal:
      return numeric_value(parse_numeric_text(cleaned), spec);
    case AnswerKind::multiple_choice:
      return choice_value(cleaned, spec);
    case AnswerKind::boolean:
      return boolean_value(cleaned);
    case AnswerKind::free_text:
      break;
  }
  AnswerValue v;
  v.value = cleaned;
  v.canonical_text = cleaned;
  return v;
}

AnswerValue normalize_answer(double raw, const AnswerSpec& spec) {
  if (!std::isfinite(raw)) throw UnparseableAnswer("non-finite numeric answer");
  if (spec.is_numeric()) return numeric_value(raw, spec);
  return normalize_answer(std::string_view(format_number(raw)), spec);
}

AnswerValue normalize_answer(bool raw, const AnswerSpec& spec) {
  if (spec.is_numeric()) return numeric_value(raw ? 1.0 : 0.0, spec);
  if (spec.kind == AnswerKind::boolean) {
    AnswerValue v;
    v.value = raw;
    v.canonical_text = raw ? "true" : "false";
    return v;
  }
  return normalize_answer(std::string_view(raw ? "true" : "false"), spec);
}

AnswerValue normalize_answer(const Json& raw, const AnswerSpec& spec) {
  if (raw.is_string()) return normalize_answer(std::string_view(raw.get_ref<const std::string&>()), spec);
  if (raw.is_boolean()) return normalize_answer(raw.get<bool>(), spec);
  if (raw.is_number()) return normalize_answer(raw.get<double>(), spec);
  if (raw.is_null()) {
    if (spec.is_numeric()) throw UnparseableAnswer("null is not a number");
    return normalize_answer(std::string_view("none"), spec);
  }
  throw UnparseableAnswer("answer must be a scalar, got " + std::string(raw.type_name()));
}

AnswerValue normalize_answer(const AnswerValue& value, const AnswerSpec& spec) {
  return std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return normalize_answer(std::string_view(v), spec);
        } else {
          return normalize_answer(v, spec);
        }
      },
      value.value);
}

bool answers_match(const AnswerValue& predicted, const AnswerValue& gold, const AnswerSpec& spec) {
  if (spec.is_numeric()) {
    if (!predicted.is_number() || !gold.is_number()) return false;
    double a = std::get<double>(predicted.value);
    double b = std::get<double>(gold.value);
    double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= std::max(spec.numeric_rel_tol * scale, 1e-9);
  }
  return predicted.canonical_text == gold.canonical_text;
}

bool names_an_option(const AnswerValue& value, const AnswerSpec& spec) {
  if (spec.kind != AnswerKind::multiple_choice) return true;
  return option_index_for_label(value.canonical_text, spec.options.size()).has_value();
}

}  // namespace pips
