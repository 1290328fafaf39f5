#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sit::minilang {

enum class TokenKind {
  kIdentifier,
  kInteger,
  kString,
  kKeyword,
  kOperator,
  kPunctuation,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string lexeme;
  int line;  // 1-based
  int col;   // 1-based, in bytes

  bool operator==(const Token&) const = default;
};

bool is_keyword(std::string_view word);

// Splits MiniLang source into tokens. Whitespace separates tokens and is not
// itself a token. Throws LexError on any character outside the alphabet.
std::vector<Token> lex(std::string_view source);

}  // namespace sit::minilang
