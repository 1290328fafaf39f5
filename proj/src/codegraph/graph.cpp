#include "sit/codegraph/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "sit/error.hpp"

namespace sit::codegraph {

using minilang::Ast;
using minilang::AstNode;
using minilang::TokenKind;

std::string_view to_string(View v) {
  switch (v) {
    case View::kAst: return "ast";
    case View::kFlow: return "flow";
    case View::kDep: return "dep";
  }
  return "?";
}

ViewMatrix::ViewMatrix(View view, std::size_t n)
    : view_(view), n_(n), entries_(n * n, 0) {
  for (std::size_t i = 0; i < n; ++i) entries_[i * n + i] = 1;
}

void ViewMatrix::connect(std::size_t i, std::size_t j) {
  entries_[i * n_ + j] = 1;
  entries_[j * n_ + i] = 1;
}

std::size_t ViewMatrix::edge_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) c += at(i, j);
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> ViewMatrix::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if (at(i, j)) out.emplace_back(i, j);
  return out;
}

namespace {

// Leftmost terminal below `id` that is not syntax glue, or -1.
int representative(const Ast& ast, int id) {
  const AstNode& n = ast.node(id);
  if (n.is_terminal) return minilang::is_glue(n) ? -1 : id;
  for (int c : n.children) {
    const int r = representative(ast, c);
    if (r >= 0) return r;
  }
  return -1;
}

std::size_t tix(const Ast& ast, int node_id) {
  return static_cast<std::size_t>(ast.terminal_index(node_id));
}

}  // namespace

ViewMatrix build_ast_view(const Ast& ast) {
  ViewMatrix m(View::kAst, ast.terminals().size());
  // The program root is realized as the global root token, so it contributes
  // no pairwise edges of its own.
  for (const AstNode& n : ast.nodes()) {
    if (n.is_terminal || n.id == 0) continue;
    std::vector<std::size_t> reps;
    for (int c : n.children) {
      const int r = representative(ast, c);
      if (r >= 0) reps.push_back(tix(ast, r));
    }
    for (std::size_t a = 0; a < reps.size(); ++a)
      for (std::size_t b = a + 1; b < reps.size(); ++b) m.connect(reps[a], reps[b]);
  }
  return m;
}

ViewMatrix build_flow_view(const Ast& ast,
                           std::span<const minilang::StatementSpan> spans) {
  ViewMatrix m(View::kFlow, ast.terminals().size());
  for (const auto& s : spans) {
    for (std::size_t a = 0; a < s.terminal_ids.size(); ++a)
      for (std::size_t b = a + 1; b < s.terminal_ids.size(); ++b)
        m.connect(tix(ast, s.terminal_ids[a]), tix(ast, s.terminal_ids[b]));
  }
  return m;
}

namespace {

// Reaching definitions over the statement tree. Branches merge their
// definition sets; loop bodies are repeated until no new definition reaches
// their entry. Function bodies get their own scope.
class DefUseWalker {
 public:
  DefUseWalker(const Ast& ast, ViewMatrix& out) : ast_(ast), out_(out) {}

  void run() {
    for (int c : ast_.root().children) statement(c);
  }

 private:
  using Defs = std::map<std::string, std::set<int>>;

  const Ast& ast_;
  ViewMatrix& out_;
  Defs reaching_;

  void define(int terminal) { reaching_[ast_.node(terminal).lexeme] = {terminal}; }

  static void merge(Defs& into, const Defs& from) {
    for (const auto& [name, defs] : from) into[name].insert(defs.begin(), defs.end());
  }

  void uses(int id) {
    const AstNode& n = ast_.node(id);
    if (n.is_terminal) {
      if (n.token_kind != TokenKind::kIdentifier) return;
      auto it = reaching_.find(n.lexeme);
      if (it == reaching_.end()) return;
      for (int d : it->second) out_.connect(tix(ast_, d), tix(ast_, id));
      return;
    }
    for (int c : n.children) uses(c);
  }

  // Statements after the header colon, stopping at an else clause.
  void body(const AstNode& n) {
    bool started = false;
    for (int c : n.children) {
      const AstNode& child = ast_.node(c);
      if (!started) {
        started = child.is_terminal && child.token_kind == TokenKind::kPunctuation && child.lexeme == ":";
        continue;
      }
      if (!is_alternative(child)) statement(c);
    }
  }

  // else clause, or an elif chain stored as a nested If.
  bool is_alternative(const AstNode& n) const {
    if (n.kind == "Else") return true;
    return n.kind == "If" && ast_.node(n.children.front()).lexeme == "elif";
  }

  const AstNode* alternative(const AstNode& n) const {
    if (n.children.empty()) return nullptr;
    const AstNode& last = ast_.node(n.children.back());
    return is_alternative(last) ? &last : nullptr;
  }

  // Runs `pass` (one trip through the loop) until the entry state is stable.
  template <typename F>
  void loop(F pass) {
    Defs entry = reaching_;
    for (;;) {
      reaching_ = entry;
      pass();
      Defs next = entry;
      merge(next, reaching_);
      if (next == entry) break;
      entry = std::move(next);
    }
    reaching_ = std::move(entry);
  }

  void statement(int id) {
    const AstNode& n = ast_.node(id);
    if (n.kind == "Assign") {
      uses(n.children[2]);
      define(n.children[0]);
    } else if (n.kind == "Return" || n.kind == "Expr") {
      uses(n.children.back());
    } else if (n.kind == "For") {
      uses(n.children[3]);
      loop([&] {
        define(n.children[1]);
        body(n);
      });
    } else if (n.kind == "While") {
      uses(n.children[1]);
      loop([&] {
        body(n);
        uses(n.children[1]);
      });
    } else if (n.kind == "If") {
      uses(n.children[1]);
      const Defs before = reaching_;
      body(n);
      Defs taken = std::move(reaching_);
      reaching_ = before;
      if (const AstNode* alt = alternative(n)) {
        if (alt->kind == "Else") body(*alt);
        else statement(alt->id);
      }
      merge(reaching_, taken);
    } else if (n.kind == "FunctionDef") {
      auto saved = reaching_;
      for (int c : n.children) {
        if (ast_.node(c).kind != "Arguments") continue;
        for (int p : ast_.node(c).children)
          if (ast_.node(p).token_kind == TokenKind::kIdentifier) define(p);
      }
      body(n);
      reaching_ = std::move(saved);
    }
  }
};

}  // namespace

ViewMatrix build_dep_view(const Ast& ast, DepMode mode) {
  ViewMatrix m(View::kDep, ast.terminals().size());
  if (mode == DepMode::kDefUse) {
    DefUseWalker(ast, m).run();
    return m;
  }
  std::map<std::string, std::vector<std::size_t>> occurrences;
  for (int id : ast.terminals()) {
    const AstNode& n = ast.node(id);
    if (n.token_kind == TokenKind::kIdentifier) occurrences[n.lexeme].push_back(tix(ast, id));
  }
  for (const auto& [name, occ] : occurrences)
    for (std::size_t a = 0; a < occ.size(); ++a)
      for (std::size_t b = a + 1; b < occ.size(); ++b) m.connect(occ[a], occ[b]);
  return m;
}

MultiViewGraph combine(const ViewMatrix& ast, const ViewMatrix& flow,
                       const ViewMatrix& dep, ViewWeights w) {
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0)
    throw NegativeWeight("view weights must be non-negative");
  if (ast.n() != flow.n() || ast.n() != dep.n())
    throw ShapeError("view sizes differ: " + std::to_string(ast.n()) + ", " +
                     std::to_string(flow.n()) + ", " + std::to_string(dep.n()));
  MultiViewGraph g;
  g.ast = ast;
  g.flow = flow;
  g.dep = dep;
  g.weights = w;
  const std::size_t n = ast.n();
  const std::size_t m = n + 1;
  g.combined.assign(m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g.combined[(i + 1) * m + (j + 1)] = w.alpha * ast.at(i, j) +
                                          w.beta * flow.at(i, j) +
                                          w.gamma * dep.at(i, j);
  for (std::size_t k = 0; k < m; ++k) {
    g.combined[k] = std::max(g.combined[k], 1.0);
    g.combined[k * m] = std::max(g.combined[k * m], 1.0);
    if (g.combined[k * m + k] <= 0.0) g.combined[k * m + k] = 1.0;
  }
  return g;
}

MultiViewGraph bare_graph(std::vector<std::string> tokens) {
  const std::size_t n = tokens.size();
  auto g = combine(ViewMatrix(View::kAst, n), ViewMatrix(View::kFlow, n),
                   ViewMatrix(View::kDep, n));
  g.tokens = std::move(tokens);
  return g;
}

}  // namespace sit::codegraph
