#include "sit/trainer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sit/error.hpp"

namespace sit::trainer {

namespace {

void check_pairs(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  if (hyps.size() != refs.size())
    throw ShapeError(std::to_string(hyps.size()) + " hypotheses for " + std::to_string(refs.size()) +
                     " references");
  for (std::size_t i = 0; i < refs.size(); ++i)
    if (refs[i].empty()) throw EmptyReference("reference " + std::to_string(i) + " is empty");
}

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Sentence& s, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    ++out[std::vector<std::string>(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i + n))];
  return out;
}

std::size_t lcs(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  check_pairs(hyps, refs);
  if (hyps.empty()) return 0.0;
  double matches[4] = {0, 0, 0, 0}, totals[4] = {0, 0, 0, 0};
  double hyp_len = 0, ref_len = 0;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    hyp_len += static_cast<double>(hyps[k].size());
    ref_len += static_cast<double>(refs[k].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hyps[k], n);
      const auto r = ngrams(refs[k], n);
      for (const auto& [g, c] : h) {
        totals[n - 1] += c;
        auto it = r.find(g);
        if (it != r.end()) matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0 || matches[0] == 0) return 0.0;
  double log_p = std::log(matches[0] / totals[0]);
  for (int n = 1; n < 4; ++n) log_p += std::log((matches[n] + 1.0) / (totals[n] + 1.0));
  const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return bp * std::exp(log_p / 4.0);
}

double rouge_l(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, double beta) {
  check_pairs(hyps, refs);
  if (hyps.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto l = static_cast<double>(lcs(hyps[k], refs[k]));
    if (l == 0) continue;
    const double p = l / static_cast<double>(hyps[k].size());
    const double r = l / static_cast<double>(refs[k].size());
    const double b2 = beta * beta;
    total += (1 + b2) * p * r / (r + b2 * p);
  }
  return total / static_cast<double>(hyps.size());
}

}  // namespace sit::trainer
