#pragma once

#include <string>
#include <vector>

#include "sit/codegraph/builder.hpp"
#include "sit/model/config.hpp"
#include "sit/trainer/corpus.hpp"
#include "sit/trainer/vocab.hpp"

namespace sit::trainer {

enum class SourceMode {
  kGraph,  // subtokenized terminals with the multi-view graph
  kSbt,    // structure-based traversal sequence, no structural edges
};

struct Example {
  std::vector<int> source;  // starts with <root>
  codegraph::MultiViewGraph graph;
  std::vector<int> target;  // <bos> summary <eos>
  std::string code;
  std::string summary;
};

struct DataOptions {
  SourceMode source = SourceMode::kGraph;
  codegraph::GraphOptions graph;
};

// Source-side tokens of one program (without <root>), as fed to the encoder.
codegraph::MultiViewGraph source_graph(const std::string& code, const DataOptions& opts);

struct Vocabs {
  Vocab src;
  Vocab tgt;
};

Vocabs build_vocabs(const std::vector<CorpusEntry>& corpus, const DataOptions& opts);

// Targets longer than max_tgt_len - 1 words are truncated so that <eos>
// still fits in the decoder budget.
Example make_example(const CorpusEntry& entry, const Vocabs& vocabs, const DataOptions& opts,
                     int max_tgt_len);
std::vector<Example> make_examples(const std::vector<CorpusEntry>& corpus, const Vocabs& vocabs,
                                   const DataOptions& opts, int max_tgt_len);

// Padded view of a group of examples.
struct Batch {
  std::size_t size = 0;
  std::size_t src_width = 0;
  std::size_t tgt_width = 0;
  std::vector<int> source;  // size x src_width, <pad> filled
  std::vector<int> target;  // size x tgt_width, <pad> filled
  std::vector<std::size_t> source_lengths;
  std::vector<std::size_t> target_lengths;
  std::vector<const codegraph::MultiViewGraph*> graphs;
};

Batch make_batch(const std::vector<const Example*>& examples);

}  // namespace sit::trainer
