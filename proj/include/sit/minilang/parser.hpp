#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sit/minilang/ast.hpp"
#include "sit/minilang/token.hpp"

namespace sit::minilang {

// Recursive-descent parser for MiniLang (grammar in docs/GRAMMAR.md).
// Blocks are delimited by indentation, read from token columns. Throws
// ParseError on any grammar violation.
Ast parse(std::span<const Token> tokens);

// lex + parse.
Ast parse_source(std::string_view source);

struct StatementSpan {
  int stmt_id = 0;
  std::vector<int> terminal_ids;  // AST node ids, source order

  bool operator==(const StatementSpan&) const = default;
};

// One span per simple statement and one per compound-statement header
// (if/elif/else/while/for/def), bodies handled recursively.
std::vector<StatementSpan> statements(const Ast& ast);

}  // namespace sit::minilang
