#include "sit/model/mask.hpp"

#include <algorithm>
#include <random>

namespace sit::model {

AttentionMask structure_mask(const codegraph::MultiViewGraph& g) {
  const std::size_t n = g.size();
  AttentionMask m{numkit::Mask{n, n, std::vector<std::uint8_t>(n * n, 0)}, g.combined};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m.allowed.allowed[i * n + j] = g.allowed(i, j) ? 1 : 0;
  return m;
}

AttentionMask pattern_mask(const Pattern& p, std::size_t l) {
  AttentionMask m{numkit::Mask{l, l, std::vector<std::uint8_t>(l * l, 0)}, std::nullopt};
  auto set = [&](std::size_t i, std::size_t j) {
    m.allowed.allowed[i * l + j] = 1;
    m.allowed.allowed[j * l + i] = 1;
  };
  switch (p.kind) {
    case Pattern::Kind::kStructured:
    case Pattern::Kind::kFull:
      m.allowed = numkit::Mask::all(l, l);
      break;
    case Pattern::Kind::kWindow:
      for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = i; j < l && j - i <= static_cast<std::size_t>(p.window); ++j) set(i, j);
      break;
    case Pattern::Kind::kRandom: {
      // Seeded by (seed, l) so a given length always gets the same pattern.
      std::mt19937_64 rng(p.seed * 0x9E3779B97F4A7C15ull + l);
      for (std::size_t i = 0; i < l; ++i) set(i, i);
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < l; ++i) {
        pool.clear();
        for (std::size_t j = 0; j < l; ++j)
          if (j != i) pool.push_back(j);
        const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(p.partners));
        // Partial Fisher-Yates: `take` distinct partners.
        for (std::size_t k = 0; k < take; ++k) {
          std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
          std::swap(pool[k], pool[pick(rng)]);
          set(i, pool[k]);
        }
      }
      break;
    }
  }
  return m;
}

AttentionMask encoder_mask(const Pattern& p, const codegraph::MultiViewGraph& g) {
  if (p.kind == Pattern::Kind::kStructured) return structure_mask(g);
  return pattern_mask(p, g.size());
}

numkit::Mask causal_mask(std::size_t l) {
  numkit::Mask m{l, l, std::vector<std::uint8_t>(l * l, 0)};
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j <= i; ++j) m.allowed[i * l + j] = 1;
  return m;
}

}  // namespace sit::model
