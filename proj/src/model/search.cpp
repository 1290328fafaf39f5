#include "sit/model/search.hpp"

#include <algorithm>
#include <cmath>

namespace sit::model {

double Hypothesis::normalized(double alpha) const {
  if (token_ids.empty()) return log_prob;
  return log_prob / std::pow(static_cast<double>(token_ids.size()), alpha);
}

namespace {

std::vector<int> strip(std::vector<int> ids) {
  if (!ids.empty() && ids.back() == special::kEos) ids.pop_back();
  return ids;
}

}  // namespace

template <typename T>
std::vector<int> greedy_decode(const SitModel<T>& model, const Tensor<T>& memory) {
  std::vector<int> prefix{special::kBos};
  std::vector<int> out;
  const auto max_len = static_cast<std::size_t>(model.config().max_tgt_len);
  while (out.size() < max_len) {
    const auto logits = model.decode_step(memory, prefix);
    const int next = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (next == special::kEos) break;
    out.push_back(next);
    prefix.push_back(next);
  }
  return out;
}

template <typename T>
Hypothesis beam_search(const SitModel<T>& model, const Tensor<T>& memory, int beam, double len_norm) {
  beam = std::max(beam, 1);
  const auto max_len = static_cast<std::size_t>(model.config().max_tgt_len);
  std::vector<Hypothesis> alive{Hypothesis{}};
  std::vector<Hypothesis> finished;

  struct Candidate {
    double score;
    double logit;
    std::size_t hyp;
    int token;
  };

  for (std::size_t step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      std::vector<int> prefix{special::kBos};
      prefix.insert(prefix.end(), alive[h].token_ids.begin(), alive[h].token_ids.end());
      const auto logits = model.decode_step(memory, prefix);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (T x : logits) z += std::exp(static_cast<double>(x) - mx);
      const double logz = std::log(z) + mx;
      for (std::size_t v = 0; v < logits.size(); ++v)
        cands.push_back({alive[h].log_prob + static_cast<double>(logits[v]) - logz,
                         static_cast<double>(logits[v]), h, static_cast<int>(v)});
    }
    // Ties resolve toward the larger raw logit, then the earlier hypothesis
    // and lower token id, matching greedy argmax.
    const std::size_t keep = std::min(cands.size(), static_cast<std::size_t>(beam));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.logit != b.logit) return a.logit > b.logit;
                        if (a.hyp != b.hyp) return a.hyp < b.hyp;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t c = 0; c < keep; ++c) {
      Hypothesis h = alive[cands[c].hyp];
      h.token_ids.push_back(cands[c].token);
      h.log_prob = cands[c].score;
      h.finished = cands[c].token == special::kEos;
      (h.finished ? finished : next).push_back(std::move(h));
    }
    alive = std::move(next);
    if (finished.size() >= static_cast<std::size_t>(beam)) break;
  }
  const auto& pool = finished.empty() ? alive : finished;
  const auto best = std::max_element(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    return a.normalized(len_norm) < b.normalized(len_norm);
  });
  return *best;
}

template <typename T>
std::vector<int> beam_decode(const SitModel<T>& model, const Tensor<T>& memory, int beam, double len_norm) {
  return strip(beam_search(model, memory, beam, len_norm).token_ids);
}

template std::vector<int> greedy_decode(const SitModel<float>&, const Tensor<float>&);
template std::vector<int> greedy_decode(const SitModel<double>&, const Tensor<double>&);
template Hypothesis beam_search(const SitModel<float>&, const Tensor<float>&, int, double);
template Hypothesis beam_search(const SitModel<double>&, const Tensor<double>&, int, double);
template std::vector<int> beam_decode(const SitModel<float>&, const Tensor<float>&, int, double);
template std::vector<int> beam_decode(const SitModel<double>&, const Tensor<double>&, int, double);

}  // namespace sit::model
