#include "sit/codegraph/builder.hpp"

#include <functional>

namespace sit::codegraph {

MultiViewGraph build_graph(std::string_view source, const GraphOptions& opts) {
  const auto ast = minilang::parse_source(source);
  const auto spans = minilang::statements(ast);
  const auto lexemes = ast.terminal_lexemes();
  const auto map = subtokenize(lexemes, opts.subtokens);
  const std::size_t keep =
      std::min(map.pieces.size(), opts.max_len > 0 ? opts.max_len - 1 : 0);

  auto view = [&](const ViewMatrix& v) { return truncate(expand(v, map), keep); };
  auto g = combine(view(build_ast_view(ast)), view(build_flow_view(ast, spans)),
                   view(build_dep_view(ast, opts.dep_mode)), opts.weights);
  g.tokens.assign(map.pieces.begin(), map.pieces.begin() + static_cast<std::ptrdiff_t>(keep));
  return g;
}

std::vector<std::string> sbt_flatten(const minilang::Ast& ast) {
  std::vector<std::string> out;
  if (ast.size() == 0) return out;
  out.reserve(ast.size() * 4);
  std::function<void(int)> rec = [&](int id) {
    const auto& n = ast.node(id);
    const std::string& label = n.is_terminal ? n.lexeme : n.kind;
    out.emplace_back("(");
    out.push_back(label);
    for (int c : n.children) rec(c);
    out.emplace_back(")");
    out.push_back(label);
  };
  rec(0);
  return out;
}

MultiViewGraph build_sbt_graph(std::string_view source, const GraphOptions& opts) {
  const auto ast = minilang::parse_source(source);
  // Same traversal as sbt_flatten; only terminal lexemes are split, kind
  // labels stay whole.
  std::vector<std::string> pieces;
  std::function<void(int)> rec = [&](int id) {
    const auto& n = ast.node(id);
    std::vector<std::string> label{n.is_terminal ? n.lexeme : n.kind};
    if (n.is_terminal) label = subtokenize(label, opts.subtokens).pieces;
    pieces.emplace_back("(");
    pieces.insert(pieces.end(), label.begin(), label.end());
    for (int c : n.children) rec(c);
    pieces.emplace_back(")");
    pieces.insert(pieces.end(), label.begin(), label.end());
  };
  if (ast.size() > 0) rec(0);
  const std::size_t keep = std::min(pieces.size(), opts.max_len > 0 ? opts.max_len - 1 : 0);
  pieces.resize(keep);
  return bare_graph(std::move(pieces));
}

}  // namespace sit::codegraph
