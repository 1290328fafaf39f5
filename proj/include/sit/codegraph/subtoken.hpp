#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sit/codegraph/graph.hpp"

namespace sit::codegraph {

enum class SubtokenMode {
  kSplit,  // camelCase / snake_case identifiers split into lowercase pieces
  kRaw,    // one piece per terminal, unchanged
};

struct SubtokenMap {
  std::vector<std::string> pieces;
  std::vector<std::size_t> origin;  // piece index -> terminal index
};

std::vector<std::string> split_identifier(std::string_view word);

SubtokenMap subtokenize(std::span<const std::string> terminals,
                        SubtokenMode mode = SubtokenMode::kSplit);

// Every piece inherits the edges of its origin terminal; pieces of the same
// terminal form a clique.
ViewMatrix expand(const ViewMatrix& view, const SubtokenMap& map);

// Keeps the first `n` tokens of a view.
ViewMatrix truncate(const ViewMatrix& view, std::size_t n);

}  // namespace sit::codegraph
