#include "sit/trainer/data.hpp"

#include <algorithm>

#include "sit/error.hpp"

namespace sit::trainer {

using model::special::kBos;
using model::special::kEos;
using model::special::kPad;
using model::special::kRoot;

codegraph::MultiViewGraph source_graph(const std::string& code, const DataOptions& opts) {
  return opts.source == SourceMode::kSbt ? codegraph::build_sbt_graph(code, opts.graph)
                                         : codegraph::build_graph(code, opts.graph);
}

Vocabs build_vocabs(const std::vector<CorpusEntry>& corpus, const DataOptions& opts) {
  std::vector<std::vector<std::string>> src, tgt;
  src.reserve(corpus.size());
  tgt.reserve(corpus.size());
  for (const auto& e : corpus) {
    src.push_back(source_graph(e.code, opts).tokens);
    tgt.push_back(summary_tokens(e.summary));
  }
  return {Vocab::build(src), Vocab::build(tgt)};
}

Example make_example(const CorpusEntry& entry, const Vocabs& vocabs, const DataOptions& opts, int max_tgt_len) {
  Example ex;
  ex.code = entry.code;
  ex.summary = entry.summary;
  ex.graph = source_graph(entry.code, opts);
  ex.source.push_back(kRoot);
  for (const auto& t : ex.graph.tokens) ex.source.push_back(vocabs.src.id(t));
  auto words = summary_tokens(entry.summary);
  const auto budget = static_cast<std::size_t>(std::max(0, max_tgt_len - 1));
  if (words.size() > budget) words.resize(budget);
  ex.target.push_back(kBos);
  for (const auto& w : words) ex.target.push_back(vocabs.tgt.id(w));
  ex.target.push_back(kEos);
  return ex;
}

std::vector<Example> make_examples(const std::vector<CorpusEntry>& corpus, const Vocabs& vocabs,
                                   const DataOptions& opts, int max_tgt_len) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back(make_example(e, vocabs, opts, max_tgt_len));
  return out;
}

Batch make_batch(const std::vector<const Example*>& examples) {
  Batch b;
  b.size = examples.size();
  for (const auto* e : examples) {
    b.src_width = std::max(b.src_width, e->source.size());
    b.tgt_width = std::max(b.tgt_width, e->target.size());
  }
  b.source.assign(b.size * b.src_width, kPad);
  b.target.assign(b.size * b.tgt_width, kPad);
  for (std::size_t r = 0; r < b.size; ++r) {
    const Example& e = *examples[r];
    if (e.graph.size() != e.source.size()) throw GraphSizeMismatch(e.source.size(), e.graph.size());
    std::copy(e.source.begin(), e.source.end(), b.source.begin() + static_cast<long>(r * b.src_width));
    std::copy(e.target.begin(), e.target.end(), b.target.begin() + static_cast<long>(r * b.tgt_width));
    b.source_lengths.push_back(e.source.size());
    b.target_lengths.push_back(e.target.size());
    b.graphs.push_back(&e.graph);
  }
  return b;
}

}  // namespace sit::trainer
