#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pips::py {

enum class TokenKind { name, number, string, op, comment, newline, nl, indent, dedent, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  int line = 0;  // 1-based
  int col = 0;   // 0-based byte offset in the line
};

struct Diagnostic {
  int line = 0;
  int col = 0;
  std::string message;
};

struct TokenStream {
  std::vector<Token> tokens;
  // First tokenizer error. Tokenizing continues past it so token-level scans
  // still see the rest of the source.
  std::optional<Diagnostic> error;
};

// Tokenizes guest source the way the reference interpreter does: logical
// lines, INDENT/DEDENT, implicit joining inside brackets, backslash
// continuation. Comments are kept as tokens; blank lines produce nl tokens.
TokenStream tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace pips::py
