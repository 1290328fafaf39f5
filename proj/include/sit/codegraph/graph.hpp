#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sit/minilang/ast.hpp"
#include "sit/minilang/parser.hpp"

namespace sit::codegraph {

enum class View { kAst, kFlow, kDep };
std::string_view to_string(View v);

// Symmetric 0/1 adjacency over the terminal tokens of one program (the
// synthetic root is not part of a view; `combine` adds it at index 0).
// Self-loops are always present.
class ViewMatrix {
 public:
  ViewMatrix() = default;
  ViewMatrix(View view, std::size_t n);

  View view() const { return view_; }
  std::size_t n() const { return n_; }
  bool at(std::size_t i, std::size_t j) const { return entries_[i * n_ + j] != 0; }
  void connect(std::size_t i, std::size_t j);
  // Undirected edges excluding self-loops.
  std::size_t edge_count() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool operator==(const ViewMatrix&) const = default;

 private:
  View view_ = View::kAst;
  std::size_t n_ = 0;
  std::vector<std::uint8_t> entries_;
};

struct ViewWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  bool operator==(const ViewWeights&) const = default;
};

// Three views over one token list plus their weighted combination. The
// combined matrix has size() = tokens + 1 rows; row/column 0 is the global
// root, row/column i+1 is token i.
struct MultiViewGraph {
  std::vector<std::string> tokens;
  ViewMatrix ast;
  ViewMatrix flow;
  ViewMatrix dep;
  ViewWeights weights;
  std::vector<double> combined;

  std::size_t size() const { return ast.n() + 1; }
  double at(std::size_t i, std::size_t j) const { return combined[i * size() + j]; }
  bool allowed(std::size_t i, std::size_t j) const { return at(i, j) > 0.0; }
};

ViewMatrix build_ast_view(const minilang::Ast& ast);
ViewMatrix build_flow_view(const minilang::Ast& ast,
                           std::span<const minilang::StatementSpan> spans);

enum class DepMode { kDefUse, kAllPairs };
ViewMatrix build_dep_view(const minilang::Ast& ast, DepMode mode = DepMode::kDefUse);

// Weighted sum of the views with the root row/column and the diagonal forced
// to at least 1. Throws NegativeWeight.
MultiViewGraph combine(const ViewMatrix& ast, const ViewMatrix& flow,
                       const ViewMatrix& dep, ViewWeights w = {});

// Graph over `tokens` with no structural edges; only self-loops and root.
MultiViewGraph bare_graph(std::vector<std::string> tokens);

}  // namespace sit::codegraph
