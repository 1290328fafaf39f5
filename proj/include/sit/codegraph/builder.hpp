#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sit/codegraph/graph.hpp"
#include "sit/codegraph/subtoken.hpp"

namespace sit::codegraph {

struct GraphOptions {
  ViewWeights weights;
  DepMode dep_mode = DepMode::kDefUse;
  SubtokenMode subtokens = SubtokenMode::kSplit;
  // Sequence budget including the root slot.
  std::size_t max_len = 400;
};

// Source text to subtoken-level multi-view graph, truncated to
// `max_len - 1` tokens. Throws LexError / ParseError.
MultiViewGraph build_graph(std::string_view source, const GraphOptions& opts = {});

// Structure-based traversal of the tree: for every node, "(" label, the
// children, ")" label. Labels are lexemes for terminals, kinds otherwise.
std::vector<std::string> sbt_flatten(const minilang::Ast& ast);

// SBT sequence of `source`, subtokenized and truncated like build_graph,
// wrapped in a graph with no structural edges.
MultiViewGraph build_sbt_graph(std::string_view source, const GraphOptions& opts = {});

}  // namespace sit::codegraph
