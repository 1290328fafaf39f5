#include "sit/minilang/ast.hpp"

#include <functional>

namespace sit::minilang {

Ast::Ast(std::vector<AstNode> nodes) : nodes_(std::move(nodes)) {
  parents_.assign(nodes_.size(), -1);
  terminal_pos_.assign(nodes_.size(), -1);
  for (const auto& n : nodes_) {
    for (int c : n.children) parents_[static_cast<std::size_t>(c)] = n.id;
    if (n.is_terminal) {
      terminal_pos_[static_cast<std::size_t>(n.id)] = static_cast<int>(terminals_.size());
      terminals_.push_back(n.id);
    }
  }
}

int Ast::terminal_index(int node_id) const {
  return terminal_pos_.at(static_cast<std::size_t>(node_id));
}

std::vector<std::string> Ast::terminal_lexemes() const {
  std::vector<std::string> out;
  out.reserve(terminals_.size());
  for (int id : terminals_) out.push_back(node(id).lexeme);
  return out;
}

int Ast::leftmost_terminal(int node_id) const {
  int id = node_id;
  while (!node(id).is_terminal) {
    if (node(id).children.empty()) return -1;
    id = node(id).children.front();
  }
  return id;
}

bool is_glue(const AstNode& n) {
  return n.is_terminal && (n.token_kind == TokenKind::kPunctuation ||
                           (n.token_kind == TokenKind::kOperator && n.lexeme == "="));
}

std::string to_sexpr(const Ast& ast) {
  std::string out;
  std::function<void(int)> rec = [&](int id) {
    const auto& n = ast.node(id);
    if (n.is_terminal) {
      out += n.lexeme;
      return;
    }
    out += "(" + n.kind;
    for (int c : n.children) {
      out += ' ';
      rec(c);
    }
    out += ")";
  };
  if (ast.size() > 0) rec(0);
  return out;
}

}  // namespace sit::minilang
