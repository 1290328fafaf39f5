#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sit/minilang/token.hpp"

namespace sit::minilang {

// Node of a parsed program. Terminal nodes wrap exactly one source token and
// have no children; non-terminals name a construct (Assign, BinaryOp, ...).
struct AstNode {
  int id = 0;
  std::string kind;
  std::string lexeme;          // non-empty iff terminal
  std::vector<int> children;   // ordered, ids of child nodes
  bool is_terminal = false;
  int token = -1;              // index into the token stream, terminals only
  TokenKind token_kind = TokenKind::kPunctuation;  // terminals only
};

// A parsed program. Node ids are 0..n-1 in pre-order; node 0 is the root.
class Ast {
 public:
  Ast() = default;
  explicit Ast(std::vector<AstNode> nodes);

  const AstNode& root() const { return nodes_.front(); }
  const AstNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<AstNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  // Terminal node ids in source order.
  const std::vector<int>& terminals() const { return terminals_; }
  // Position of a terminal node within terminals(), or -1.
  int terminal_index(int node_id) const;
  std::vector<std::string> terminal_lexemes() const;

  int parent(int node_id) const { return parents_.at(static_cast<std::size_t>(node_id)); }
  // Leftmost terminal descendant (a terminal is its own).
  int leftmost_terminal(int node_id) const;

 private:
  std::vector<AstNode> nodes_;
  std::vector<int> terminals_;
  std::vector<int> terminal_pos_;
  std::vector<int> parents_;
};

// Syntax glue (punctuation and the assignment '=') carries no construct of
// its own; it is kept as a terminal but skipped when projecting tree edges.
bool is_glue(const AstNode& n);

std::string to_sexpr(const Ast& ast);

}  // namespace sit::minilang
