#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sit/codegraph/graph_io.hpp"
#include "sit/error.hpp"
#include "sit/model/search.hpp"
#include "sit/trainer/ablate.hpp"
#include "sit/trainer/train.hpp"

#ifndef SIT_GIT_DESCRIBE
#define SIT_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sit;

namespace {

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error("UsageError", what) {}
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("IOError", "cannot write " + p.string());
  f << text;
  if (!f) throw Error("IOError", "write failed: " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("IOError", "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Written before the command does any work; `args` holds every resolved
// option so the run can be repeated from the manifest alone.
void write_manifest(const fs::path& out, const std::string& command, const json& args,
                    const std::vector<std::string>& config_paths, std::uint64_t seed) {
  fs::create_directories(out);
  json m{{"command", command},       {"arguments", args},    {"config_paths", config_paths},
         {"seed", seed},             {"git_describe", SIT_GIT_DESCRIBE}, {"timestamp", timestamp()},
         {"output_directory", fs::absolute(out).string()}};
  write_file(out / "manifest.json", m.dump(2) + "\n");
}

// Merged config file: {"model": {...}, "train": {...}, "data": {...}}.
struct Settings {
  model::SitConfig model;
  trainer::TrainConfig train;
  trainer::DataOptions data;
};

struct Overrides {
  std::optional<int> d_model, heads, d_ff, encoder_layers, decoder_layers, max_src_len, max_tgt_len, rpe_clip;
  std::optional<double> dropout;
  std::optional<std::string> pattern, layer_pattern, attention_mode;
  std::optional<bool> share;
  std::optional<int> batch_size, epochs, max_steps, beam;
  std::optional<double> lr, warmup_frac, weight_decay;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, beta, gamma;
  std::optional<std::string> dep_mode, source;

  void add_model(CLI::App* app) {
    app->add_option("--d-model", d_model);
    app->add_option("--heads", heads);
    app->add_option("--d-ff", d_ff);
    app->add_option("--encoder-layers", encoder_layers);
    app->add_option("--decoder-layers", decoder_layers);
    app->add_option("--max-src-len", max_src_len);
    app->add_option("--max-tgt-len", max_tgt_len);
    app->add_option("--rpe-clip", rpe_clip);
    app->add_option("--dropout", dropout);
    app->add_option("--pattern", pattern, "structured | full | window(w) | random(r,seed)");
    app->add_option("--layer-pattern", layer_pattern, "one of G/S per encoder layer");
    app->add_option("--attention-mode", attention_mode, "masked | multiplicative");
    app->add_option("--share-encoder", share);
  }
  void add_train(CLI::App* app) {
    app->add_option("--batch-size", batch_size);
    app->add_option("--epochs", epochs);
    app->add_option("--max-steps", max_steps);
    app->add_option("--lr", lr);
    app->add_option("--warmup-frac", warmup_frac);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--seed", seed);
    app->add_option("--beam", beam, "beam size for evaluation");
  }
  void add_data(CLI::App* app) {
    app->add_option("--alpha", alpha, "AST view weight");
    app->add_option("--beta", beta, "flow view weight");
    app->add_option("--gamma", gamma, "dependency view weight");
    app->add_option("--dep-mode", dep_mode)->check(CLI::IsMember({"defuse", "allpairs"}));
    app->add_option("--source", source)->check(CLI::IsMember({"graph", "sbt"}));
  }
};

Settings load_settings(const std::string& config_path, const Overrides& o) {
  Settings s;
  std::vector<std::string> errors;
  json file = json::object();
  if (!config_path.empty()) {
    try {
      file = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      throw FormatError(config_path + ": " + e.what());
    }
  }
  auto section = [&](const char* key, auto& target) {
    if (!file.contains(key)) return;
    try {
      file.at(key).get_to(target);
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations) errors.push_back(std::string(key) + ": " + v);
    }
  };
  section("model", s.model);
  section("train", s.train);
  if (file.contains("data")) {
    const auto& d = file["data"];
    s.data.source = d.value("source", "graph") == "sbt" ? trainer::SourceMode::kSbt : trainer::SourceMode::kGraph;
    s.data.graph.weights.alpha = d.value("alpha", 1.0);
    s.data.graph.weights.beta = d.value("beta", 1.0);
    s.data.graph.weights.gamma = d.value("gamma", 1.0);
    if (d.value("dep_mode", "defuse") == "allpairs") s.data.graph.dep_mode = codegraph::DepMode::kAllPairs;
  }

  auto& m = s.model;
  if (o.d_model) m.d_model = *o.d_model;
  if (o.heads) m.heads = *o.heads;
  if (o.d_ff) m.d_ff = *o.d_ff;
  if (o.encoder_layers) {
    m.encoder_layers = *o.encoder_layers;
    if (!o.layer_pattern && !file.contains("model")) m.layer_pattern = model::module_pattern(m.encoder_layers);
  }
  if (o.decoder_layers) m.decoder_layers = *o.decoder_layers;
  if (o.max_src_len) m.max_src_len = *o.max_src_len;
  if (o.max_tgt_len) m.max_tgt_len = *o.max_tgt_len;
  if (o.rpe_clip) m.rpe_clip = *o.rpe_clip;
  if (o.dropout) m.dropout = *o.dropout;
  if (o.layer_pattern) m.layer_pattern = *o.layer_pattern;
  if (o.share) m.share_encoder_params = *o.share;
  if (o.pattern) {
    try {
      m.pattern = model::parse_pattern(*o.pattern);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.violations.begin(), e.violations.end());
    }
  }
  if (o.attention_mode) {
    if (*o.attention_mode == "masked") m.attention_mode = model::AttentionMode::kMasked;
    else if (*o.attention_mode == "multiplicative") m.attention_mode = model::AttentionMode::kMultiplicative;
    else errors.push_back("attention_mode must be masked or multiplicative");
  }
  auto& t = s.train;
  if (o.batch_size) t.batch_size = *o.batch_size;
  if (o.epochs) t.max_epochs = *o.epochs;
  if (o.max_steps) t.max_steps = *o.max_steps;
  if (o.beam) t.eval_beam = *o.beam;
  if (o.lr) t.lr = *o.lr;
  if (o.warmup_frac) t.warmup_frac = *o.warmup_frac;
  if (o.weight_decay) t.weight_decay = *o.weight_decay;
  if (o.seed) t.seed = *o.seed;
  auto& g = s.data.graph;
  if (o.alpha) g.weights.alpha = *o.alpha;
  if (o.beta) g.weights.beta = *o.beta;
  if (o.gamma) g.weights.gamma = *o.gamma;
  if (o.dep_mode) g.dep_mode = *o.dep_mode == "allpairs" ? codegraph::DepMode::kAllPairs : codegraph::DepMode::kDefUse;
  if (o.source) s.data.source = *o.source == "sbt" ? trainer::SourceMode::kSbt : trainer::SourceMode::kGraph;
  g.max_len = static_cast<std::size_t>(std::max(m.max_src_len, 1));

  // Vocabulary sizes are filled in from the corpus; check everything else.
  auto checked = m;
  checked.src_vocab = checked.tgt_vocab = model::special::kCount + 1;
  for (const auto& v : checked.violations()) errors.push_back("model: " + v);
  for (const auto& v : t.violations()) errors.push_back("train: " + v);
  for (double w : {g.weights.alpha, g.weights.beta, g.weights.gamma})
    if (w < 0) {
      errors.push_back("data: view weights must be non-negative");
      break;
    }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return s;
}

json settings_json(const Settings& s) {
  json j;
  j["model"] = s.model;
  j["train"] = s.train;
  j["data"] = {{"source", s.data.source == trainer::SourceMode::kSbt ? "sbt" : "graph"},
               {"alpha", s.data.graph.weights.alpha},
               {"beta", s.data.graph.weights.beta},
               {"gamma", s.data.graph.weights.gamma},
               {"dep_mode", s.data.graph.dep_mode == codegraph::DepMode::kAllPairs ? "allpairs" : "defuse"}};
  return j;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("invalid seed '" + part + "'");
    }
  }
  if (out.empty()) throw UsageError("--seeds needs at least one value");
  return out;
}

void print_error(const std::string& code, const std::string& message, const json& extra = json::object()) {
  json j{{"error", code}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-induced Transformer for code summarization"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic MiniLang corpus");
  int gen_n = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_task = "mixed", gen_out;
  gen->add_option("--n", gen_n, "number of examples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--task", gen_task)->check(CLI::IsMember({"rename", "dataflow", "mixed"}));
  gen->add_option("--out", gen_out, "output directory")->required();

  // build-graphs
  auto* bg = app.add_subcommand("build-graphs", "Build one graph JSON per corpus example");
  std::string bg_corpus, bg_out;
  bool bg_strict = false;
  Overrides bg_o;
  bg->add_option("--corpus", bg_corpus)->required();
  bg->add_option("--out", bg_out)->required();
  bg->add_flag("--strict", bg_strict, "fail on the first unparsable example");
  bg_o.add_data(bg);
  bg->add_option("--max-src-len", bg_o.max_src_len);

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_corpus, tr_valid, tr_out, tr_config;
  Overrides tr_o;
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--valid", tr_valid, "validation corpus for per-epoch BLEU");
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--config", tr_config, "JSON with model/train/data sections");
  tr_o.add_model(tr);
  tr_o.add_train(tr);
  tr_o.add_data(tr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Beam-decode a corpus and report BLEU / ROUGE-L");
  std::string ev_run, ev_corpus, ev_out;
  std::optional<int> ev_beam;
  ev->add_option("--run", ev_run, "training output directory")->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--out", ev_out)->required();
  ev->add_option("--beam", ev_beam)->check(CLI::PositiveNumber);

  // summarize
  auto* su = app.add_subcommand("summarize", "Summarize one MiniLang source file (or stdin)");
  std::string su_run, su_file;
  std::optional<int> su_beam;
  su->add_option("--run", su_run)->required();
  su->add_option("file", su_file, "source file; stdin when omitted or '-'");
  su->add_option("--beam", su_beam)->check(CLI::PositiveNumber);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train and compare the variants of an ablation suite");
  std::string ab_suite, ab_corpus, ab_test, ab_out, ab_config, ab_seeds = "0";
  int ab_window = 64, ab_partners = 64, ab_threads = 0;
  Overrides ab_o;
  ab->add_option("--suite", ab_suite)->required()->check(CLI::IsMember({"patterns", "proportion", "sharing", "sbt"}));
  ab->add_option("--corpus", ab_corpus, "training corpus")->required();
  ab->add_option("--test", ab_test, "test corpus")->required();
  ab->add_option("--out", ab_out)->required();
  ab->add_option("--config", ab_config);
  ab->add_option("--seeds", ab_seeds, "comma-separated seeds");
  ab->add_option("--window", ab_window)->check(CLI::NonNegativeNumber);
  ab->add_option("--partners", ab_partners)->check(CLI::NonNegativeNumber);
  ab->add_option("--threads", ab_threads, "worker threads (default SIT_THREADS)");
  ab_o.add_model(ab);
  ab_o.add_train(ab);
  ab_o.add_data(ab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 2;
  }

  try {
    if (*gen) {
      const fs::path out(gen_out);
      write_manifest(out, "gen-corpus", {{"n", gen_n}, {"seed", gen_seed}, {"task", gen_task}}, {}, gen_seed);
      trainer::write_corpus((out / "corpus.jsonl").string(),
                            trainer::gen_corpus(gen_n, gen_seed, trainer::parse_task(gen_task)));
    } else if (*bg) {
      const Settings s = load_settings("", bg_o);
      const fs::path out(bg_out);
      write_manifest(out, "build-graphs", {{"corpus", bg_corpus}, {"strict", bg_strict}, {"settings", settings_json(s)}},
                     {}, 0);
      const auto corpus = trainer::read_corpus(bg_corpus);
      fs::create_directories(out / "graphs");
      json errors = json::array();
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
          const auto g = codegraph::build_graph(corpus[i].code, s.data.graph);
          char name[32];
          std::snprintf(name, sizeof name, "%06zu.json", i);
          write_file(out / "graphs" / name, codegraph::serialize_graph(g) + "\n");
        } catch (const Error& e) {
          if (e.code() != "LexError" && e.code() != "ParseError") throw;
          errors.push_back({{"index", i}, {"line", i + 1}, {"error", e.code()}, {"message", e.what()}});
          if (bg_strict) break;
        }
      }
      write_file(out / "errors.json", errors.dump(2) + "\n");
      std::cout << (corpus.size() - errors.size()) << " graphs written, " << errors.size() << " errors\n";
      if (bg_strict && !errors.empty()) {
        print_error("ParseError", "example " + errors[0]["index"].dump() + ": " + errors[0]["message"].get<std::string>(),
                    {{"report", (out / "errors.json").string()}});
        return 1;
      }
    } else if (*tr) {
      Settings s = load_settings(tr_config, tr_o);
      const fs::path out(tr_out);
      write_manifest(out, "train",
                     {{"corpus", tr_corpus}, {"valid", tr_valid}, {"config", tr_config}, {"settings", settings_json(s)}},
                     tr_config.empty() ? std::vector<std::string>{} : std::vector<std::string>{tr_config},
                     s.train.seed);
      const auto corpus = trainer::read_corpus(tr_corpus);
      if (corpus.empty()) throw Error("EmptyCorpus", tr_corpus + " has no examples");
      trainer::RunFiles files;
      files.vocabs = trainer::build_vocabs(corpus, s.data);
      files.model = s.model;
      files.model.src_vocab = static_cast<int>(files.vocabs.src.size());
      files.model.tgt_vocab = static_cast<int>(files.vocabs.tgt.size());
      files.train = s.train;
      files.data = s.data;
      const auto examples = trainer::make_examples(corpus, files.vocabs, s.data, files.model.max_tgt_len);
      std::vector<trainer::Example> valid;
      if (!tr_valid.empty())
        valid = trainer::make_examples(trainer::read_corpus(tr_valid), files.vocabs, s.data, files.model.max_tgt_len);
      auto result = trainer::train<float>(files.model, files.train, examples, valid);
      trainer::save_run((out / "run").string(), *result.model, files, result.epochs);
      std::cout << trainer::epoch_log_csv(result.epochs);
    } else if (*ev) {
      const auto files = trainer::load_run_files(ev_run);
      const int beam = ev_beam.value_or(files.train.eval_beam);
      const fs::path out(ev_out);
      write_manifest(out, "evaluate", {{"run", ev_run}, {"corpus", ev_corpus}, {"beam", beam}}, {}, files.train.seed);
      const auto m = trainer::load_model<float>(ev_run, files);
      const auto report = trainer::evaluate(*m, files, trainer::read_corpus(ev_corpus), beam);
      trainer::MetricRow row{"eval-beam" + std::to_string(beam), files.train.seed, report.bleu, report.rouge_l, 0, 0.0};
      write_file(out / "metrics.csv", trainer::metrics_csv({row}));
      write_file(out / "outputs.csv", trainer::eval_report_csv(report));
      std::cout << trainer::metrics_csv({row});
    } else if (*su) {
      const auto files = trainer::load_run_files(su_run);
      const auto m = trainer::load_model<float>(su_run, files);
      std::string code;
      if (su_file.empty() || su_file == "-")
        code.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
      else
        code = read_file(su_file);
      const auto ex = trainer::make_example({code, ""}, files.vocabs, files.data, m->config().max_tgt_len);
      numkit::NoGradGuard guard;
      const auto memory = m->encode(ex.source, ex.graph, m->eval_context());
      const int beam = su_beam.value_or(files.train.eval_beam);
      const auto words = files.vocabs.tgt.decode(model::beam_decode(*m, memory, beam));
      std::string line;
      for (const auto& w : words) line += (line.empty() ? "" : " ") + w;
      std::cout << line << "\n";
    } else if (*ab) {
      Settings s = load_settings(ab_config, ab_o);
      trainer::AblationOptions opts;
      opts.window = ab_window;
      opts.partners = ab_partners;
      opts.seeds = parse_seeds(ab_seeds);
      opts.threads = ab_threads;
      const fs::path out(ab_out);
      write_manifest(out, "ablate",
                     {{"suite", ab_suite}, {"corpus", ab_corpus}, {"test", ab_test}, {"seeds", opts.seeds},
                      {"window", ab_window}, {"partners", ab_partners}, {"settings", settings_json(s)}},
                     ab_config.empty() ? std::vector<std::string>{} : std::vector<std::string>{ab_config},
                     opts.seeds.front());
      const auto variants = trainer::suite_variants(trainer::parse_suite(ab_suite), s.model, s.data, opts);
      const auto rows = trainer::run_ablation(variants, s.train, trainer::read_corpus(ab_corpus),
                                              trainer::read_corpus(ab_test), opts);
      write_file(out / "ablation.csv", trainer::metrics_csv(rows));
      std::cout << trainer::metrics_csv(rows);
    }
  } catch (const ConfigError& e) {
    print_error(e.code(), "invalid configuration", {{"violations", e.violations}});
    return 2;
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
