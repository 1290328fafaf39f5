#pragma once

#include <vector>

#include "sit/model/model.hpp"

namespace sit::model {

struct Hypothesis {
  std::vector<int> token_ids;  // generated tokens, <bos> excluded, <eos> included when finished
  double log_prob = 0.0;
  bool finished = false;

  // log_prob / len^alpha
  double normalized(double alpha) const;
};

// Argmax per step until <eos> or max_tgt_len tokens. Returns the generated
// ids without <bos>/<eos>.
template <typename T>
std::vector<int> greedy_decode(const SitModel<T>& model, const Tensor<T>& memory);

// Beam search keeping the top `beam` hypotheses each step. The result is the
// best finished hypothesis by length-normalized log-probability (the best
// unfinished one if none finished).
template <typename T>
Hypothesis beam_search(const SitModel<T>& model, const Tensor<T>& memory, int beam, double len_norm = 0.6);

template <typename T>
std::vector<int> beam_decode(const SitModel<T>& model, const Tensor<T>& memory, int beam, double len_norm = 0.6);

}  // namespace sit::model
