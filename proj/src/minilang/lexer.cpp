#include <array>
#include <cctype>

#include "sit/error.hpp"
#include "sit/minilang/token.hpp"

namespace sit::minilang {

namespace {

constexpr std::array<std::string_view, 8> kKeywords = {
    "def", "if", "elif", "else", "while", "for", "in", "return"};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kInteger: return "integer";
    case TokenKind::kString: return "string";
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kOperator: return "operator";
    case TokenKind::kPunctuation: return "punctuation";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  for (auto kw : kKeywords)
    if (kw == word) return true;
  return false;
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto emit = [&](TokenKind kind, std::size_t len) {
    out.push_back({kind, std::string(src.substr(i, len)), line, col});
    advance(len);
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      advance(1);
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < src.size() && ident_char(src[j])) ++j;
      const auto word = src.substr(i, j - i);
      emit(is_keyword(word) ? TokenKind::kKeyword : TokenKind::kIdentifier,
           j - i);
      continue;
    }
    if (digit(c)) {
      std::size_t j = i + 1;
      while (j < src.size() && digit(src[j])) ++j;
      emit(TokenKind::kInteger, j - i);
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != c && src[j] != '\n') {
        if (src[j] == '\\' && j + 1 < src.size() && src[j + 1] != '\n') ++j;
        ++j;
      }
      if (j >= src.size() || src[j] != c) throw LexError(line, col, c);
      emit(TokenKind::kString, j - i + 1);
      continue;
    }
    if (c == '=') {
      emit(TokenKind::kOperator, i + 1 < src.size() && src[i + 1] == '=' ? 2 : 1);
      continue;
    }
    switch (c) {
      case '+': case '-': case '*': case '/': case '<': case '>':
        emit(TokenKind::kOperator, 1);
        continue;
      case '(': case ')': case ',': case ':':
        emit(TokenKind::kPunctuation, 1);
        continue;
      default:
        throw LexError(line, col, c);
    }
  }
  return out;
}

}  // namespace sit::minilang
