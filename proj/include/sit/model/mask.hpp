#pragma once

#include <optional>
#include <vector>

#include "sit/codegraph/graph.hpp"
#include "sit/model/config.hpp"
#include "sit/numkit/ops.hpp"

namespace sit::model {

// Encoder self-attention restriction. `allowed` always includes the
// diagonal. `weights` holds the combined view weights, used only by the
// multiplicative attention mode.
struct AttentionMask {
  numkit::Mask allowed;
  std::optional<std::vector<double>> weights;

  std::size_t n() const { return allowed.rows; }
};

// allowed[i][j] := combined[i][j] > 0
AttentionMask structure_mask(const codegraph::MultiViewGraph& g);

// full: everything; window(w): |i - j| <= w; random(r, seed): self-loops
// plus r uniformly drawn undirected partners per row.
AttentionMask pattern_mask(const Pattern& p, std::size_t l);

// Mask the encoder uses for S layers under config pattern `p`.
AttentionMask encoder_mask(const Pattern& p, const codegraph::MultiViewGraph& g);

numkit::Mask causal_mask(std::size_t l);

}  // namespace sit::model
