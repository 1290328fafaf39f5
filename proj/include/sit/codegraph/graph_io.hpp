#pragma once

#include <string>
#include <string_view>

#include "sit/codegraph/graph.hpp"

namespace sit::codegraph {

// Canonical JSON interchange form:
//   {"n": N, "tokens": [...], "views": {"ast": [[i, j], ...], "flow": ...,
//    "dep": ...}, "weights": [alpha, beta, gamma]}
// Indices are 0-based over `tokens` (root excluded). Edges are written once
// with i < j, sorted; self-loops are implicit.
std::string serialize_graph(const MultiViewGraph& g);

// Accepts edges in either orientation and explicit self-loops. Throws
// FormatError on malformed input.
MultiViewGraph deserialize_graph(std::string_view text);

}  // namespace sit::codegraph
