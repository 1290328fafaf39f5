#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sit/model/model.hpp"
#include "sit/trainer/data.hpp"

namespace sit::trainer {

struct TrainConfig {
  int batch_size = 16;
  double lr = 5e-4;
  double warmup_frac = 0.06;
  double weight_decay = 0.01;
  int max_epochs = 10;
  std::uint64_t seed = 0;
  int eval_beam = 4;
  // Stop after this many optimizer steps; 0 = no cap. The schedule spans
  // min(max_steps, epochs * batches).
  int max_steps = 0;
  double max_grad_norm = 1.0;  // 0 disables clipping
  // Validation examples decoded greedily after every epoch (0 = skip).
  int validate_limit = 200;

  std::vector<std::string> violations() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct StepStats {
  std::size_t step = 0;  // 1-based count of completed optimizer steps
  int epoch = 0;
  double loss = 0.0;
  double token_accuracy = 0.0;
  double lr = 0.0;
};

struct EpochLog {
  int epoch = 0;
  std::size_t steps = 0;
  double loss = 0.0;
  double token_accuracy = 0.0;
  double val_bleu = 0.0;  // NaN without a validation set
  double seconds = 0.0;
};

// Returning false stops training after the current step.
using StepCallback = std::function<bool(const StepStats&)>;

template <typename T>
struct TrainResult {
  std::unique_ptr<model::SitModel<T>> model;
  std::vector<EpochLog> epochs;
  std::size_t steps = 0;
};

struct BatchScore {
  double loss = 0.0;  // mean cross-entropy per target token
  std::size_t tokens = 0;
  std::size_t correct = 0;
};

// Teacher-forced loss over a batch. With `backprop` the gradients are
// accumulated into the model parameters.
template <typename T>
BatchScore batch_loss(model::SitModel<T>& model, const Batch& batch, const model::ForwardContext<T>& ctx,
                      bool backprop);

// Teacher-forced token accuracy over a set, eval mode.
template <typename T>
double token_accuracy(const model::SitModel<T>& model, const std::vector<Example>& examples);

// cfg.src_vocab / tgt_vocab must already be set. `validation` may be empty.
template <typename T>
TrainResult<T> train(const model::SitConfig& cfg, const TrainConfig& tc, const std::vector<Example>& train_set,
                     const std::vector<Example>& validation = {}, const StepCallback& on_step = {});

template <typename T>
std::vector<std::vector<int>> decode_all(const model::SitModel<T>& model, const std::vector<Example>& examples,
                                         int beam);

std::string epoch_log_csv(const std::vector<EpochLog>& log);

// On-disk run: model.ckpt, config.json (model + train config), vocab.json,
// data.json (source options), train_log.csv.
struct RunFiles {
  model::SitConfig model;
  TrainConfig train;
  DataOptions data;
  Vocabs vocabs;
};

template <typename T>
void save_run(const std::string& dir, const model::SitModel<T>& m, const RunFiles& files,
              const std::vector<EpochLog>& log);
RunFiles load_run_files(const std::string& dir);
template <typename T>
std::unique_ptr<model::SitModel<T>> load_model(const std::string& dir, const RunFiles& files);

struct EvalReport {
  double bleu = 0.0;
  double rouge_l = 0.0;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;
};

// Beam-decodes every entry. Throws VocabMismatch if the vocabularies do not
// fit the model.
template <typename T>
EvalReport evaluate(const model::SitModel<T>& m, const RunFiles& files, const std::vector<CorpusEntry>& corpus,
                    int beam);

std::string eval_report_csv(const EvalReport& r);

}  // namespace sit::trainer
