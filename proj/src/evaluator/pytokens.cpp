#include "pips/evaluator/pytokens.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>

namespace pips::py {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async", "await", "break",
    "class", "continue", "def",   "del",      "elif",     "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",       "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",      "while",  "with",  "yield"};

// Longest operators first so the scan can take the first match.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",
    "&",   "|",   "^",   "~",   "<",   ">",  "(",  ")",  "[",  "]",  "{",  "}",  ",",  ":",  ".",
    ";",   "="};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool valid_string_prefix(std::string prefix) {
  std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::array<std::string_view, 11> ok = {"", "r", "u", "b", "f", "br", "rb", "fr", "rf"};
  return std::find(ok.begin(), ok.end(), prefix) != ok.end();
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenStream run() {
    while (pos_ < src_.size()) {
      if (at_line_start_) {
        if (!handle_indentation()) continue;
      }
      scan_token();
    }
    finish();
    return std::move(out_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::size_t line_begin_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_{0};
  struct Open {
    char ch;
    int line;
    int col;
  };
  std::vector<Open> brackets_;
  TokenStream out_;

  int col() const { return static_cast<int>(pos_ - line_begin_); }

  void error(int line, int col, std::string message) {
    if (!out_.error) out_.error = Diagnostic{line, col, std::move(message)};
  }

  void emit(TokenKind kind, std::string text, int line, int col) {
    out_.tokens.push_back({kind, std::move(text), line, col});
  }

  bool last_is_logical_end() const {
    if (out_.tokens.empty()) return true;
    for (auto it = out_.tokens.rbegin(); it != out_.tokens.rend(); ++it) {
      if (it->kind == TokenKind::comment || it->kind == TokenKind::nl) continue;
      return it->kind == TokenKind::newline || it->kind == TokenKind::indent || it->kind == TokenKind::dedent;
    }
    return true;
  }

  void new_line() {
    ++line_;
    line_begin_ = pos_;
  }

  // Measures indentation of the line at pos_. Returns false when the line
  // was blank or comment-only and has been consumed.
  bool handle_indentation() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      if (src_[p] == ' ') ++width;
      else if (src_[p] == '\t') width = (width / 8 + 1) * 8;
      else width = 0;
      ++p;
    }
    at_line_start_ = false;
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '\r' || src_[p] == '#') {
      pos_ = p;
      if (p < src_.size() && src_[p] == '#') scan_comment();
      if (pos_ < src_.size()) {
        std::size_t nl_col = pos_ - line_begin_;
        skip_line_end();
        emit(TokenKind::nl, "\n", line_ - 1, static_cast<int>(nl_col));
      }
      at_line_start_ = true;
      return false;
    }
    pos_ = p;
    if (!brackets_.empty()) return true;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenKind::indent, "", line_, 0);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::dedent, "", line_, col());
      }
      if (width != indents_.back()) {
        error(line_, col(), "unindent does not match any outer indentation level");
      }
    }
    return true;
  }

  void skip_line_end() {
    if (pos_ < src_.size() && src_[pos_] == '\r') ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
    new_line();
  }

  void scan_comment() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
    emit(TokenKind::comment, std::string(src_.substr(start, pos_ - start)), line_,
         static_cast<int>(start - line_begin_));
  }

  void scan_token() {
    char c = src_[pos_];
    if (c == ' ' || c == '\t' || c == '\f') {
      ++pos_;
      return;
    }
    if (c == '\r' || c == '\n') {
      int l = line_, cl = col();
      skip_line_end();
      if (brackets_.empty()) {
        emit(last_is_logical_end() ? TokenKind::nl : TokenKind::newline, "\n", l, cl);
        at_line_start_ = true;
      }
      return;
    }
    if (c == '#') {
      scan_comment();
      return;
    }
    if (c == '\\') {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && src_[p] == '\r') ++p;
      if (p < src_.size() && src_[p] == '\n') {
        pos_ = p + 1;
        new_line();
        if (pos_ >= src_.size()) error(line_ - 1, 0, "unexpected EOF while parsing");
        return;
      }
      error(line_, col(), "unexpected character after line continuation character");
      ++pos_;
      return;
    }
    if (ident_start(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
          valid_string_prefix(std::string(src_.substr(start, pos_ - start)))) {
        scan_string(start);
        return;
      }
      emit(TokenKind::name, std::string(src_.substr(start, pos_ - start)), line_,
           static_cast<int>(start - line_begin_));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      scan_number();
      return;
    }
    if (c == '\'' || c == '"') {
      scan_string(pos_);
      return;
    }
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        scan_operator(op);
        return;
      }
    }
    error(line_, col(), std::string("invalid character '") + c + "'");
    ++pos_;
  }

  void scan_operator(std::string_view op) {
    int l = line_, cl = col();
    pos_ += op.size();
    if (op == "(" || op == "[" || op == "{") {
      brackets_.push_back({op[0], l, cl});
    } else if (op == ")" || op == "]" || op == "}") {
      char expect = op == ")" ? '(' : op == "]" ? '[' : '{';
      if (brackets_.empty()) {
        error(l, cl, std::string("unmatched '") + std::string(op) + "'");
      } else if (brackets_.back().ch != expect) {
        error(l, cl,
              std::string("closing parenthesis '") + std::string(op) + "' does not match opening parenthesis '" +
                  brackets_.back().ch + "'");
        brackets_.pop_back();
      } else {
        brackets_.pop_back();
      }
    }
    emit(TokenKind::op, std::string(op), l, cl);
  }

  void scan_number() {
    std::size_t start = pos_;
    int cl = col();
    auto digits = [&](auto pred) {
      bool any = false;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (pred(d)) {
          any = true;
          ++pos_;
        } else if (d == '_' && any && pos_ + 1 < src_.size() && pred(src_[pos_ + 1])) {
          ++pos_;
        } else {
          break;
        }
      }
      return any;
    };
    auto dec = [](char d) { return d >= '0' && d <= '9'; };
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && std::strchr("xXoObB", src_[pos_ + 1])) {
      char base = static_cast<char>(std::tolower(src_[pos_ + 1]));
      pos_ += 2;
      bool ok = false;
      if (base == 'x') ok = digits([](char d) { return std::isxdigit(static_cast<unsigned char>(d)) != 0; });
      if (base == 'o') ok = digits([](char d) { return d >= '0' && d <= '7'; });
      if (base == 'b') ok = digits([](char d) { return d == '0' || d == '1'; });
      if (!ok) error(line_, cl, "invalid number literal");
    } else {
      bool int_part = digits(dec);
      bool is_float = false;
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        digits(dec);
        is_float = true;
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (!digits(dec)) pos_ = save;
        else is_float = true;
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) {
        ++pos_;
        is_float = true;
      }
      std::string_view text = src_.substr(start, pos_ - start);
      if (int_part && !is_float && text.size() > 1 && text[0] == '0' &&
          text.find_first_not_of("0_") != std::string_view::npos) {
        error(line_, cl, "leading zeros in decimal integer literals are not permitted");
      }
    }
    if (pos_ < src_.size() && src_[pos_] == '_') error(line_, col(), "invalid decimal literal");
    emit(TokenKind::number, std::string(src_.substr(start, pos_ - start)), line_, cl);
  }

  void scan_string(std::size_t start) {
    int l = line_;
    int cl = static_cast<int>(start - line_begin_);
    char quote = src_[pos_];
    bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) {
        error(l, cl, triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
        break;
      }
      char c = src_[pos_];
      if (c == '\\') {
        pos_ += 1;
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n') {
            ++pos_;
            new_line();
          } else if (src_[pos_] == '\r') {
            ++pos_;
            if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
            new_line();
          } else {
            ++pos_;
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) {
          error(l, cl, "unterminated string literal");
          break;
        }
        skip_line_end();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenKind::string, std::string(src_.substr(start, pos_ - start)), l, cl);
  }

  void finish() {
    for (const auto& open : brackets_) {
      error(open.line, open.col, std::string("'") + open.ch + "' was never closed");
      break;
    }
    if (!last_is_logical_end()) emit(TokenKind::newline, "", line_, col());
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::dedent, "", line_, 0);
    }
    emit(TokenKind::end, "", line_, 0);
  }
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

TokenStream tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace pips::py
