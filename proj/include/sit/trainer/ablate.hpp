#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sit/model/config.hpp"
#include "sit/trainer/corpus.hpp"
#include "sit/trainer/data.hpp"
#include "sit/trainer/train.hpp"

namespace sit::trainer {

enum class Suite { kPatterns, kProportion, kSharing, kSbt };

Suite parse_suite(const std::string& s);
std::string to_string(Suite s);

struct Variant {
  std::string name;
  model::SitConfig model;
  DataOptions data;
};

struct AblationOptions {
  int window = 64;    // w for the window pattern
  int partners = 64;  // r for the random pattern
  std::uint64_t pattern_seed = 0;
  std::vector<std::uint64_t> seeds = {0};
  int threads = 0;  // 0: SIT_THREADS or hardware concurrency
};

// Variants of `base` compared by a suite:
//   patterns   full, window, random, structured (every encoder layer S, no modules)
//   proportion prop-0, prop-50, prop-100 (plain stacks), sit-50 (GS modules)
//   sharing    transformer, sit, transformer-shared, sit-shared
//   sbt        transformer, transformer-sbt, sit-ast-only, sit
std::vector<Variant> suite_variants(Suite suite, const model::SitConfig& base, const DataOptions& data,
                                    const AblationOptions& opts);

struct MetricRow {
  std::string variant;
  std::uint64_t seed = 0;
  double bleu = 0.0;
  double rouge_l = 0.0;
  int epochs = 0;
  double seconds_per_epoch = 0.0;
};

std::string metrics_csv(const std::vector<MetricRow>& rows);

// Worker threads for `tasks` jobs: min(requested or SIT_THREADS or hardware, tasks), at least 1.
int worker_threads(int requested, std::size_t tasks);

// Trains every variant once per seed on `train_corpus` (vocabularies built
// per variant) and beam-decodes `test_corpus` with tc.eval_beam. Rows come
// back in variant-major, seed-minor order regardless of threading.
std::vector<MetricRow> run_ablation(const std::vector<Variant>& variants, const TrainConfig& tc,
                                    const std::vector<CorpusEntry>& train_corpus,
                                    const std::vector<CorpusEntry>& test_corpus, const AblationOptions& opts);

}  // namespace sit::trainer
