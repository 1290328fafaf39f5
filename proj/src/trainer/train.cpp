#include "sit/trainer/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "sit/error.hpp"
#include "sit/model/search.hpp"
#include "sit/numkit/checkpoint.hpp"
#include "sit/trainer/metrics.hpp"
#include "sit/trainer/optim.hpp"

namespace sit::trainer {

namespace fs = std::filesystem;
using model::ForwardContext;
using model::SitConfig;
using model::SitModel;
using numkit::Tensor;

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> v;
  if (batch_size < 1) v.push_back("batch_size must be at least 1");
  if (!(lr > 0.0)) v.push_back("lr must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) v.push_back("warmup_frac must be in [0, 1]");
  if (!(weight_decay >= 0.0)) v.push_back("weight_decay must be non-negative");
  if (max_epochs < 0) v.push_back("max_epochs must be non-negative");
  if (eval_beam < 1) v.push_back("eval_beam must be at least 1");
  if (max_steps < 0) v.push_back("max_steps must be non-negative");
  if (!(max_grad_norm >= 0.0)) v.push_back("max_grad_norm must be non-negative");
  if (validate_limit < 0) v.push_back("validate_limit must be non-negative");
  return v;
}

void TrainConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},     {"lr", c.lr},
                     {"warmup_frac", c.warmup_frac},   {"weight_decay", c.weight_decay},
                     {"max_epochs", c.max_epochs},     {"seed", c.seed},
                     {"eval_beam", c.eval_beam},       {"max_steps", c.max_steps},
                     {"max_grad_norm", c.max_grad_norm}, {"validate_limit", c.validate_limit}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  std::vector<std::string> errors;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      errors.push_back(std::string("field \"") + key + "\" has the wrong type");
    }
  };
  get("batch_size", c.batch_size);
  get("lr", c.lr);
  get("warmup_frac", c.warmup_frac);
  get("weight_decay", c.weight_decay);
  get("max_epochs", c.max_epochs);
  get("seed", c.seed);
  get("eval_beam", c.eval_beam);
  get("max_steps", c.max_steps);
  get("max_grad_norm", c.max_grad_norm);
  get("validate_limit", c.validate_limit);
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

namespace {

template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row) {
  const auto data = logits.data();
  const std::size_t c = logits.cols();
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (data[row * c + j] > data[row * c + best]) best = j;
  return best;
}

std::vector<std::string> id_words(const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int i : ids) out.push_back(std::to_string(i));
  return out;
}

std::vector<int> strip_markers(const std::vector<int>& target) {
  if (target.size() < 2) return {};
  return {target.begin() + 1, target.end() - 1};
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

nlohmann::json data_to_json(const DataOptions& d) {
  return {{"source", d.source == SourceMode::kSbt ? "sbt" : "graph"},
          {"alpha", d.graph.weights.alpha},
          {"beta", d.graph.weights.beta},
          {"gamma", d.graph.weights.gamma},
          {"dep_mode", d.graph.dep_mode == codegraph::DepMode::kAllPairs ? "allpairs" : "defuse"},
          {"subtokens", d.graph.subtokens == codegraph::SubtokenMode::kRaw ? "raw" : "split"},
          {"max_len", d.graph.max_len}};
}

DataOptions data_from_json(const nlohmann::json& j) {
  DataOptions d;
  try {
    d.source = j.value("source", "graph") == "sbt" ? SourceMode::kSbt : SourceMode::kGraph;
    d.graph.weights.alpha = j.value("alpha", 1.0);
    d.graph.weights.beta = j.value("beta", 1.0);
    d.graph.weights.gamma = j.value("gamma", 1.0);
    d.graph.dep_mode =
        j.value("dep_mode", "defuse") == "allpairs" ? codegraph::DepMode::kAllPairs : codegraph::DepMode::kDefUse;
    d.graph.subtokens =
        j.value("subtokens", "split") == "raw" ? codegraph::SubtokenMode::kRaw : codegraph::SubtokenMode::kSplit;
    d.graph.max_len = j.value("max_len", std::size_t{400});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("data options: ") + e.what());
  }
  return d;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error("IOError", "cannot read " + p.string());
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("IOError", "cannot write " + p.string());
  f << text;
}

}  // namespace

template <typename T>
BatchScore batch_loss(SitModel<T>& model, const Batch& batch, const ForwardContext<T>& ctx, bool backprop) {
  std::optional<numkit::NoGradGuard> guard;
  if (!backprop) guard.emplace();
  Tensor<T> total;
  BatchScore score;
  for (std::size_t r = 0; r < batch.size; ++r) {
    std::span<const int> src(batch.source.data() + r * batch.src_width, batch.source_lengths[r]);
    const int* tgt = batch.target.data() + r * batch.tgt_width;
    const std::size_t len = batch.target_lengths[r];
    const Tensor<T> memory = model.encode(src, *batch.graphs[r], ctx);
    std::span<const int> prefix(tgt, len - 1);
    std::span<const int> gold(tgt + 1, len - 1);
    const Tensor<T> logits = model.decode(memory, prefix, ctx);
    const Tensor<T> ce = numkit::cross_entropy(logits, gold, numkit::Reduction::kSum);
    total = total.defined() ? numkit::add(total, ce) : ce;
    score.tokens += gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i)
      if (static_cast<int>(argmax_row(logits, i)) == gold[i]) ++score.correct;
  }
  if (score.tokens == 0) return score;
  const Tensor<T> loss = numkit::scale(total, T(1) / static_cast<T>(score.tokens));
  score.loss = static_cast<double>(loss.item());
  if (backprop && std::isfinite(score.loss)) numkit::backward(loss);
  return score;
}

template <typename T>
double token_accuracy(const SitModel<T>& model, const std::vector<Example>& examples) {
  std::size_t tokens = 0, correct = 0;
  auto& m = const_cast<SitModel<T>&>(model);
  for (const auto& e : examples) {
    const Batch b = make_batch({&e});
    const auto s = batch_loss(m, b, model.eval_context(), false);
    tokens += s.tokens;
    correct += s.correct;
  }
  return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0;
}

template <typename T>
std::vector<std::vector<int>> decode_all(const SitModel<T>& model, const std::vector<Example>& examples, int beam) {
  numkit::NoGradGuard guard;
  std::vector<std::vector<int>> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    const Tensor<T> memory = model.encode(e.source, e.graph, model.eval_context());
    out.push_back(beam <= 0 ? model::greedy_decode(model, memory) : model::beam_decode(model, memory, beam));
  }
  return out;
}

template <typename T>
TrainResult<T> train(const SitConfig& cfg, const TrainConfig& tc, const std::vector<Example>& train_set,
                     const std::vector<Example>& validation, const StepCallback& on_step) {
  cfg.validate();
  tc.validate();
  if (train_set.empty()) throw Error("EmptyCorpus", "training corpus is empty");

  TrainResult<T> result;
  result.model = std::make_unique<SitModel<T>>(cfg, tc.seed);
  auto& model = *result.model;

  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(tc.batch_size);
  const std::size_t per_epoch = (n + bs - 1) / bs;
  std::size_t total = per_epoch * static_cast<std::size_t>(tc.max_epochs);
  if (tc.max_steps > 0) total = std::min(total, static_cast<std::size_t>(tc.max_steps));
  const auto schedule = LinearSchedule::from_fraction(tc.lr, tc.warmup_frac, total);
  AdamW<T> opt(model.params(), tc.weight_decay);

  std::mt19937_64 order_rng(tc.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Example> val(validation.begin(),
                           validation.begin() + static_cast<long>(std::min<std::size_t>(
                                                    validation.size(), static_cast<std::size_t>(tc.validate_limit))));
  std::vector<std::vector<std::string>> val_refs;
  for (const auto& e : val) val_refs.push_back(id_words(strip_markers(e.target)));

  bool stop = false;
  for (int epoch = 1; epoch <= tc.max_epochs && !stop && result.steps < total; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[order_rng() % i]);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t tokens = 0, correct = 0;
    for (std::size_t start = 0; start < n && !stop && result.steps < total; start += bs) {
      std::vector<const Example*> group;
      for (std::size_t k = start; k < std::min(n, start + bs); ++k) group.push_back(&train_set[order[k]]);
      const Batch batch = make_batch(group);
      model.params().zero_grad();
      const auto s = batch_loss(model, batch, model.train_context(), true);
      if (!std::isfinite(s.loss))
        throw DivergedError("loss became " + std::to_string(s.loss) + " at step " + std::to_string(result.steps));
      clip_grad_norm(model.params(), tc.max_grad_norm);
      const double lr = schedule.at(result.steps);
      opt.step(model.params(), lr);
      ++result.steps;
      ++log.steps;
      loss_sum += s.loss * static_cast<double>(s.tokens);
      tokens += s.tokens;
      correct += s.correct;
      if (on_step &&
          !on_step({result.steps, epoch, s.loss,
                    s.tokens ? static_cast<double>(s.correct) / static_cast<double>(s.tokens) : 0.0, lr}))
        stop = true;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.loss = tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
    log.token_accuracy = tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0;
    log.val_bleu = std::nan("");
    if (!val.empty()) {
      std::vector<std::vector<std::string>> hyps;
      for (const auto& h : decode_all(model, val, 0)) hyps.push_back(id_words(h));
      log.val_bleu = bleu(hyps, val_refs);
    }
    result.epochs.push_back(log);
  }
  model.params().zero_grad();
  return result;
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(6);
  out << "epoch,steps,loss,token_accuracy,val_bleu,seconds\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.steps << ',' << e.loss << ',' << e.token_accuracy << ',';
    if (std::isfinite(e.val_bleu)) out << e.val_bleu;
    out << ',' << e.seconds << '\n';
  }
  return out.str();
}

template <typename T>
void save_run(const std::string& dir, const SitModel<T>& m, const RunFiles& files,
              const std::vector<EpochLog>& log) {
  const fs::path root(dir);
  fs::create_directories(root);
  numkit::save_checkpoint((root / "model.ckpt").string(), numkit::snapshot(m.params()));
  nlohmann::json cfg;
  cfg["model"] = files.model;
  cfg["train"] = files.train;
  cfg["data"] = data_to_json(files.data);
  write_text(root / "config.json", cfg.dump(2) + "\n");
  nlohmann::json vocab{{"src", files.vocabs.src.to_json()}, {"tgt", files.vocabs.tgt.to_json()}};
  write_text(root / "vocab.json", vocab.dump() + "\n");
  write_text(root / "train_log.csv", epoch_log_csv(log));
}

RunFiles load_run_files(const std::string& dir) {
  const fs::path root(dir);
  const auto cfg = read_json(root / "config.json");
  const auto vocab = read_json(root / "vocab.json");
  RunFiles f;
  if (!cfg.contains("model")) throw FormatError("config.json: missing \"model\"");
  cfg.at("model").get_to(f.model);
  if (cfg.contains("train")) cfg.at("train").get_to(f.train);
  if (cfg.contains("data")) f.data = data_from_json(cfg.at("data"));
  if (!vocab.contains("src") || !vocab.contains("tgt")) throw FormatError("vocab.json: missing src/tgt");
  f.vocabs.src = Vocab::from_json(vocab.at("src"));
  f.vocabs.tgt = Vocab::from_json(vocab.at("tgt"));
  return f;
}

template <typename T>
std::unique_ptr<SitModel<T>> load_model(const std::string& dir, const RunFiles& files) {
  if (static_cast<std::size_t>(files.model.src_vocab) != files.vocabs.src.size() ||
      static_cast<std::size_t>(files.model.tgt_vocab) != files.vocabs.tgt.size())
    throw VocabMismatch("vocabulary sizes " + std::to_string(files.vocabs.src.size()) + "/" +
                        std::to_string(files.vocabs.tgt.size()) + " do not match the model's " +
                        std::to_string(files.model.src_vocab) + "/" + std::to_string(files.model.tgt_vocab));
  auto m = std::make_unique<SitModel<T>>(files.model, files.train.seed);
  numkit::restore(m->params(), numkit::load_checkpoint((fs::path(dir) / "model.ckpt").string()));
  return m;
}

template <typename T>
EvalReport evaluate(const SitModel<T>& m, const RunFiles& files, const std::vector<CorpusEntry>& corpus, int beam) {
  const auto& cfg = m.config();
  if (static_cast<std::size_t>(cfg.src_vocab) != files.vocabs.src.size() ||
      static_cast<std::size_t>(cfg.tgt_vocab) != files.vocabs.tgt.size())
    throw VocabMismatch("vocabularies do not fit the model");
  const auto examples = make_examples(corpus, files.vocabs, files.data, cfg.max_tgt_len);
  EvalReport r;
  std::vector<Sentence> hyps, refs;
  const auto outputs = decode_all(m, examples, std::max(beam, 1));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    hyps.push_back(files.vocabs.tgt.decode(outputs[i]));
    refs.push_back(files.vocabs.tgt.decode(strip_markers(examples[i].target)));
    r.hypotheses.push_back(join(hyps.back()));
    r.references.push_back(join(refs.back()));
  }
  r.bleu = bleu(hyps, refs);
  r.rouge_l = rouge_l(hyps, refs);
  return r;
}

std::string eval_report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "index,hypothesis,reference\n";
  for (std::size_t i = 0; i < r.hypotheses.size(); ++i)
    out << i << ',' << csv_field(r.hypotheses[i]) << ',' << csv_field(r.references[i]) << '\n';
  return out.str();
}

#define SIT_INSTANTIATE(T)                                                                                     \
  template BatchScore batch_loss<T>(SitModel<T>&, const Batch&, const ForwardContext<T>&, bool);              \
  template double token_accuracy<T>(const SitModel<T>&, const std::vector<Example>&);                         \
  template std::vector<std::vector<int>> decode_all<T>(const SitModel<T>&, const std::vector<Example>&, int); \
  template TrainResult<T> train<T>(const SitConfig&, const TrainConfig&, const std::vector<Example>&,         \
                                   const std::vector<Example>&, const StepCallback&);                         \
  template void save_run<T>(const std::string&, const SitModel<T>&, const RunFiles&,                          \
                            const std::vector<EpochLog>&);                                                    \
  template std::unique_ptr<SitModel<T>> load_model<T>(const std::string&, const RunFiles&);                   \
  template EvalReport evaluate<T>(const SitModel<T>&, const RunFiles&, const std::vector<CorpusEntry>&, int);

SIT_INSTANTIATE(float)
SIT_INSTANTIATE(double)

}  // namespace sit::trainer
