#include "sit/trainer/ablate.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "sit/error.hpp"

namespace sit::trainer {

using model::Pattern;
using model::SitConfig;

Suite parse_suite(const std::string& s) {
  if (s == "patterns") return Suite::kPatterns;
  if (s == "proportion") return Suite::kProportion;
  if (s == "sharing") return Suite::kSharing;
  if (s == "sbt") return Suite::kSbt;
  throw Error("UsageError", "unknown suite '" + s + "' (expected patterns, proportion, sharing or sbt)");
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::kPatterns: return "patterns";
    case Suite::kProportion: return "proportion";
    case Suite::kSharing: return "sharing";
    case Suite::kSbt: return "sbt";
  }
  return "?";
}

namespace {

SitConfig plain(SitConfig c, char layer) {
  c.layer_pattern = std::string(static_cast<std::size_t>(c.encoder_layers), layer);
  c.aggregate_modules = false;
  return c;
}

SitConfig sit(SitConfig c) {
  c.layer_pattern = model::module_pattern(c.encoder_layers);
  c.aggregate_modules = true;
  c.pattern = Pattern::structured();
  return c;
}

SitConfig transformer(SitConfig c) {
  c = plain(std::move(c), 'G');
  c.pattern = Pattern::full();
  return c;
}

}  // namespace

std::vector<Variant> suite_variants(Suite suite, const SitConfig& base, const DataOptions& data,
                                    const AblationOptions& opts) {
  std::vector<Variant> out;
  switch (suite) {
    case Suite::kPatterns: {
      const SitConfig all_s = plain(base, 'S');
      auto with = [&](Pattern p) {
        SitConfig c = all_s;
        c.pattern = p;
        return c;
      };
      out.push_back({"full", with(Pattern::full()), data});
      out.push_back({"window", with(Pattern::window_of(opts.window)), data});
      out.push_back({"random", with(Pattern::random_of(opts.partners, opts.pattern_seed)), data});
      out.push_back({"structured", with(Pattern::structured()), data});
      break;
    }
    case Suite::kProportion: {
      SitConfig c0 = plain(base, 'G');
      SitConfig c50 = base;
      c50.layer_pattern = model::module_pattern(base.encoder_layers);
      c50.aggregate_modules = false;
      SitConfig c100 = plain(base, 'S');
      for (SitConfig* c : {&c0, &c50, &c100}) c->pattern = Pattern::structured();
      out.push_back({"prop-0", c0, data});
      out.push_back({"prop-50", c50, data});
      out.push_back({"prop-100", c100, data});
      out.push_back({"sit-50", sit(base), data});
      break;
    }
    case Suite::kSharing: {
      SitConfig t = transformer(base), s = sit(base);
      SitConfig ts = t, ss = s;
      ts.share_encoder_params = ss.share_encoder_params = true;
      t.share_encoder_params = s.share_encoder_params = false;
      out.push_back({"transformer", t, data});
      out.push_back({"sit", s, data});
      out.push_back({"transformer-shared", ts, data});
      out.push_back({"sit-shared", ss, data});
      break;
    }
    case Suite::kSbt: {
      DataOptions sbt = data;
      sbt.source = SourceMode::kSbt;
      DataOptions graph = data;
      graph.source = SourceMode::kGraph;
      DataOptions ast_only = graph;
      ast_only.graph.weights.beta = 0.0;
      ast_only.graph.weights.gamma = 0.0;
      out.push_back({"transformer", transformer(base), graph});
      out.push_back({"transformer-sbt", transformer(base), sbt});
      out.push_back({"sit-ast-only", sit(base), ast_only});
      out.push_back({"sit", sit(base), graph});
      break;
    }
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "variant,seed,bleu,rouge_l,epochs,seconds_per_epoch\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.seed << ',' << r.bleu << ',' << r.rouge_l << ',' << r.epochs << ','
        << r.seconds_per_epoch << '\n';
  return out.str();
}

int worker_threads(int requested, std::size_t tasks) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("SIT_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (tasks > 0) n = std::min<int>(n, static_cast<int>(tasks));
  return std::max(n, 1);
}

std::vector<MetricRow> run_ablation(const std::vector<Variant>& variants, const TrainConfig& tc,
                                    const std::vector<CorpusEntry>& train_corpus,
                                    const std::vector<CorpusEntry>& test_corpus, const AblationOptions& opts) {
  if (train_corpus.empty()) throw Error("EmptyCorpus", "training corpus is empty");
  for (const auto& v : variants) v.model.validate();
  tc.validate();

  const std::size_t n_seeds = opts.seeds.size();
  std::vector<MetricRow> rows(variants.size() * n_seeds);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    for (std::size_t task; (task = next++) < rows.size();) {
      try {
        const Variant& v = variants[task / n_seeds];
        const std::uint64_t seed = opts.seeds[task % n_seeds];
        DataOptions data = v.data;
        data.graph.max_len = static_cast<std::size_t>(v.model.max_src_len);
        RunFiles files;
        files.vocabs = build_vocabs(train_corpus, data);
        files.model = v.model;
        files.model.src_vocab = static_cast<int>(files.vocabs.src.size());
        files.model.tgt_vocab = static_cast<int>(files.vocabs.tgt.size());
        files.train = tc;
        files.train.seed = seed;
        files.data = data;
        const auto examples = make_examples(train_corpus, files.vocabs, data, files.model.max_tgt_len);
        auto result = train<float>(files.model, files.train, examples);
        const auto report = evaluate(*result.model, files, test_corpus, tc.eval_beam);
        MetricRow& row = rows[task];
        row.variant = v.name;
        row.seed = seed;
        row.bleu = report.bleu;
        row.rouge_l = report.rouge_l;
        row.epochs = static_cast<int>(result.epochs.size());
        double secs = 0.0;
        for (const auto& e : result.epochs) secs += e.seconds;
        row.seconds_per_epoch = row.epochs ? secs / row.epochs : 0.0;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = rows.size();
      }
    }
  };

  const int threads = worker_threads(opts.threads, rows.size());
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace sit::trainer
