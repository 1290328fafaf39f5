#pragma once

#include <string>
#include <vector>

namespace sit::trainer {

using Sentence = std::vector<std::string>;

// Corpus BLEU-4 with brevity penalty. Higher-order (n > 1) precisions use
// add-one smoothing: (matches + 1) / (candidates + 1).
double bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs);

// Mean over pairs of the LCS F-measure with beta = 1.2.
double rouge_l(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, double beta = 1.2);

}  // namespace sit::trainer
