#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "sit/error.hpp"
#include "sit/minilang/parser.hpp"
#include "sit/numkit/checkpoint.hpp"
#include "sit/trainer/ablate.hpp"
#include "sit/trainer/metrics.hpp"
#include "sit/trainer/optim.hpp"
#include "sit/trainer/train.hpp"

using namespace sit;
using namespace sit::trainer;
namespace fs = std::filesystem;

namespace {

template <typename T>
std::vector<std::uint8_t> ckpt(const numkit::ParamStore<T>& ps) {
  return numkit::encode_checkpoint(numkit::snapshot(ps));
}

Sentence words(const std::string& s) { return summary_tokens(s); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("sit_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Resolves which parameter the returned value derives from by reading the
// straight-line body backwards. Returns {origin, first operator}.
std::pair<std::string, std::string> resolve_origin(const std::string& code) {
  std::vector<std::string> lines;
  std::istringstream in(code);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  static const std::regex header(R"(def \w+\(([^)]*)\):)");
  static const std::regex assign(R"(    (\w+) = (\w+) ([-+*]) \d+)");
  static const std::regex ret(R"(    return (\w+))");
  std::smatch m;
  REQUIRE(std::regex_match(lines.front(), m, header));
  std::vector<std::string> params;
  std::string plist = m[1];
  for (std::size_t at = 0; at != std::string::npos;) {
    const auto comma = plist.find(", ", at);
    params.push_back(plist.substr(at, comma == std::string::npos ? comma : comma - at));
    at = comma == std::string::npos ? comma : comma + 2;
  }
  REQUIRE(std::regex_match(lines.back(), m, ret));
  std::string want = m[1], op;
  std::size_t i = lines.size() - 1;
  while (std::find(params.begin(), params.end(), want) == params.end()) {
    bool found = false;
    while (i-- > 1) {
      if (std::regex_match(lines[i], m, assign) && m[1] == want) {
        want = m[2];
        op = m[3];
        found = true;
        break;
      }
    }
    REQUIRE(found);
  }
  return {want, op};
}

std::string swap_names(const std::string& code, const std::string& a, const std::string& b) {
  const std::regex re("\\b(" + a + "|" + b + ")\\b");
  std::string out;
  auto it = std::sregex_iterator(code.begin(), code.end(), re);
  std::size_t last = 0;
  for (; it != std::sregex_iterator(); ++it) {
    out += code.substr(last, static_cast<std::size_t>(it->position()) - last);
    out += it->str() == a ? b : a;
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  return out + code.substr(last);
}

model::SitConfig small_model(const Vocabs& v) {
  model::SitConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.d_ff = 32;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.layer_pattern = "GS";
  c.max_src_len = 64;
  c.max_tgt_len = 10;
  c.dropout = 0.0;
  c.src_vocab = static_cast<int>(v.src.size());
  c.tgt_vocab = static_cast<int>(v.tgt.size());
  return c;
}

DataOptions small_data() {
  DataOptions d;
  d.graph.max_len = 64;
  return d;
}

}  // namespace

TEST_CASE("vocab ordering and round trip") {
  const auto v = Vocab::build({{"b", "a", "b"}, {"c", "a", "b"}});
  CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "<root>", "<bos>", "<eos>", "b", "a", "c"});
  CHECK(v.id("zzz") == model::special::kUnk);
  CHECK(v.decode(v.encode({"a", "q", "c"})) == std::vector<std::string>{"a", "<unk>", "c"});
  CHECK(v.decode({model::special::kBos, 5, model::special::kEos, model::special::kPad}) ==
        std::vector<std::string>{"b"});
  CHECK(Vocab::build({{"x", "y", "y"}}, 2).size() == 6);
  CHECK(Vocab::from_json(v.to_json()) == v);
  CHECK_THROWS_AS(Vocab::from_json(nlohmann::json{{"tokens", {"a", "b"}}}), FormatError);
  CHECK_THROWS_AS(Vocab::from_json(nlohmann::json{{"tokens", {"<pad>", "<unk>", "<root>", "<bos>", "<eos>", "a", "a"}}}),
                  FormatError);
  CHECK(summary_tokens("Returns  the Value") == std::vector<std::string>{"returns", "the", "value"});
}

TEST_CASE("corpus generation is deterministic") {
  for (auto task : {Task::kRename, Task::kDataflow, Task::kMixed}) {
    CHECK(gen_corpus(20, 5, task) == gen_corpus(20, 5, task));
    CHECK(gen_corpus(20, 5, task) != gen_corpus(20, 6, task));
  }
  CHECK_THROWS(gen_corpus(0, 1, Task::kRename));
  CHECK(parse_task("mixed") == Task::kMixed);
  CHECK_THROWS(parse_task("sort"));
  const auto c = gen_corpus(10, 3, Task::kMixed);
  CHECK(from_jsonl(to_jsonl(c)) == c);
  CHECK_THROWS_AS(from_jsonl("{\"code\": 1}\n"), FormatError);
}

TEST_CASE("golden corpus entry") {
  const auto golden = read_file(fs::path(SIT_FIXTURE_DIR) / "corpus_n1_seed0.jsonl");
  CHECK(to_jsonl(gen_corpus(1, 0, Task::kDataflow)) == golden);
}

TEST_CASE("generated programs parse") {
  for (const auto& e : gen_corpus(300, 11, Task::kMixed)) {
    INFO(e.code);
    CHECK_NOTHROW(minilang::parse_source(e.code));
  }
}

TEST_CASE("dataflow summaries follow the def-use chain") {
  static const std::map<std::string, std::string> word = {{"+", "incremented"}, {"*", "scaled"}, {"-", "decremented"}};
  for (const auto& e : gen_corpus(300, 12, Task::kDataflow)) {
    INFO(e.code);
    const auto [origin, op] = resolve_origin(e.code);
    CHECK(e.summary == "returns the " + word.at(op) + " value of " + origin);
  }
}

TEST_CASE("swapping parameter names moves the summary with them") {
  for (const auto& e : gen_corpus(50, 13, Task::kDataflow)) {
    const auto [origin, op] = resolve_origin(e.code);
    std::smatch m;
    const std::regex header(R"(def \w+\((\w+), (\w+), (\w+)\))");
    REQUIRE(std::regex_search(e.code, m, header));
    std::string other = m[1] == origin ? m[2] : m[1];
    const auto swapped = swap_names(e.code, origin, other);
    const auto [origin2, op2] = resolve_origin(swapped);
    CHECK(origin2 == other);
    CHECK(op2 == op);
    CHECK(origin2 != origin);
  }
}

TEST_CASE("bleu worksheet") {
  const double expect = std::pow(0.75 * 0.75 * (2.0 / 3.0) * 0.5, 0.25);
  CHECK(bleu({words("a b c d")}, {words("a b c e")}) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(bleu({words("x y z")}, {words("x y z")}) == doctest::Approx(1.0));
  CHECK(bleu({words("q r")}, {words("a b c")}) == 0.0);
  CHECK(bleu({{}}, {words("a")}) == 0.0);
  // Short hypothesis: brevity penalty exp(1 - 4/2).
  const double p = std::pow(1.0 * 1.0 * 1.0 * 1.0, 0.25);
  CHECK(bleu({words("a b")}, {words("a b c d")}) == doctest::Approx(p * std::exp(1.0 - 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(bleu({words("a")}, {{}}), EmptyReference);
  CHECK_THROWS_AS(bleu({words("a")}, {}), ShapeError);
}

TEST_CASE("rouge-l") {
  CHECK(rouge_l({words("a b c")}, {words("a b c")}) == doctest::Approx(1.0));
  CHECK(rouge_l({words("x y")}, {words("a b c")}) == 0.0);
  // LCS 2 of hyp 3, ref 4.
  const double p = 2.0 / 3.0, r = 0.5, b2 = 1.2 * 1.2;
  CHECK(rouge_l({words("a x c")}, {words("a b c d")}) == doctest::Approx((1 + b2) * p * r / (r + b2 * p)));
  CHECK_THROWS_AS(rouge_l({words("a")}, {{}}), EmptyReference);
}

TEST_CASE("learning rate schedule") {
  const auto s = LinearSchedule::from_fraction(1e-3, 0.1, 20);
  CHECK(s.warmup_steps == 2);
  CHECK(s.at(0) == doctest::Approx(0.5e-3));
  CHECK(s.at(1) == doctest::Approx(1e-3));
  CHECK(s.at(2) == doctest::Approx(1e-3));
  CHECK(s.at(11) == doctest::Approx(0.5e-3));
  CHECK(s.at(19) == doctest::Approx(1e-3 / 18));
  CHECK(s.at(20) == 0.0);
  CHECK(LinearSchedule::from_fraction(1e-3, 0.0, 4).at(0) == doctest::Approx(1e-3));
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.batch_size = 0;
  tc.lr = -1;
  tc.warmup_frac = 2;
  CHECK(tc.violations().size() == 3);
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  nlohmann::json j = TrainConfig{};
  TrainConfig back;
  back.batch_size = 3;
  j.get_to(back);
  CHECK(back.batch_size == 16);
  CHECK(back.max_grad_norm == 1.0);
}

TEST_CASE("batch loss excludes padding") {
  const auto corpus = gen_corpus(2, 21, Task::kRename);
  const auto data = small_data();
  const auto vocabs = build_vocabs(corpus, data);
  const auto ex = make_examples(corpus, vocabs, data, 10);
  REQUIRE(ex[0].target.size() != ex[1].target.size());
  model::SitModel<double> m(small_model(vocabs), 1);
  const auto ctx = m.eval_context();
  const auto both = batch_loss(m, make_batch({&ex[0], &ex[1]}), ctx, false);
  const auto a = batch_loss(m, make_batch({&ex[0]}), ctx, false);
  const auto b = batch_loss(m, make_batch({&ex[1]}), ctx, false);
  CHECK(both.tokens == ex[0].target.size() - 1 + ex[1].target.size() - 1);
  CHECK(both.tokens == a.tokens + b.tokens);
  CHECK(both.loss * both.tokens == doctest::Approx(a.loss * a.tokens + b.loss * b.tokens).epsilon(1e-12));
  const auto batch = make_batch({&ex[0], &ex[1]});
  CHECK(batch.tgt_width == std::max(ex[0].target.size(), ex[1].target.size()));
}

TEST_CASE("one optimizer step lowers the loss on a fixed batch") {
  const auto corpus = gen_corpus(4, 22, Task::kDataflow);
  const auto data = small_data();
  const auto vocabs = build_vocabs(corpus, data);
  const auto ex = make_examples(corpus, vocabs, data, 10);
  model::SitModel<double> m(small_model(vocabs), 2);
  const auto batch = make_batch({&ex[0], &ex[1], &ex[2], &ex[3]});
  AdamW<double> opt(m.params(), 0.01);
  m.params().zero_grad();
  const double before = batch_loss(m, batch, m.eval_context(), true).loss;
  opt.step(m.params(), 1e-3);
  const double after = batch_loss(m, batch, m.eval_context(), false).loss;
  CHECK(after < before);
  CHECK(opt.steps() == 1);
}

TEST_CASE("training is deterministic and zero epochs keep the initialization") {
  const auto corpus = gen_corpus(12, 23, Task::kMixed);
  const auto data = small_data();
  const auto vocabs = build_vocabs(corpus, data);
  const auto ex = make_examples(corpus, vocabs, data, 10);
  const auto cfg = small_model(vocabs);
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_epochs = 0;
  tc.seed = 9;
  auto r0 = train<double>(cfg, tc, ex);
  model::SitModel<double> init(cfg, 9);
  CHECK(ckpt(r0.model->params()) == ckpt(init.params()));
  CHECK(r0.epochs.empty());

  tc.max_epochs = 2;
  std::size_t calls = 0;
  auto r1 = train<double>(cfg, tc, ex, ex, [&](const StepStats& s) {
    CHECK(s.step == ++calls);
    return true;
  });
  auto r2 = train<double>(cfg, tc, ex, ex);
  CHECK(calls == 6);
  CHECK(r1.steps == 6);
  CHECK(ckpt(r1.model->params()) == ckpt(r2.model->params()));
  REQUIRE(r1.epochs.size() == 2);
  CHECK(r1.epochs[1].loss == r2.epochs[1].loss);
  CHECK(std::isfinite(r1.epochs[0].val_bleu));
  CHECK(epoch_log_csv(r1.epochs).rfind("epoch,steps,loss,token_accuracy,val_bleu,seconds\n", 0) == 0);
  CHECK_THROWS_AS(train<double>(cfg, tc, {}), Error);
}

TEST_CASE("save, load and evaluate a run") {
  const auto corpus = gen_corpus(8, 24, Task::kRename);
  const auto data = small_data();
  RunFiles files;
  files.data = data;
  files.vocabs = build_vocabs(corpus, data);
  files.model = small_model(files.vocabs);
  files.train.batch_size = 4;
  files.train.max_epochs = 1;
  const auto ex = make_examples(corpus, files.vocabs, data, files.model.max_tgt_len);
  auto r = train<float>(files.model, files.train, ex);
  const auto dir = scratch_dir("run");
  save_run(dir.string(), *r.model, files, r.epochs);
  for (const char* f : {"model.ckpt", "config.json", "vocab.json", "train_log.csv"}) CHECK(fs::exists(dir / f));
  const auto back = load_run_files(dir.string());
  CHECK(back.model == files.model);
  CHECK(back.vocabs.src == files.vocabs.src);
  auto loaded = load_model<float>(dir.string(), back);
  CHECK(ckpt(loaded->params()) == ckpt(r.model->params()));
  const auto a = evaluate(*r.model, files, corpus, 2);
  const auto b = evaluate(*loaded, back, corpus, 2);
  CHECK(a.hypotheses == b.hypotheses);
  CHECK(a.bleu == b.bleu);
  CHECK(a.references.size() == corpus.size());
  CHECK(eval_report_csv(a).rfind("index,hypothesis,reference\n", 0) == 0);

  auto broken = back;
  broken.model.tgt_vocab += 1;
  CHECK_THROWS_AS(load_model<float>(dir.string(), broken), VocabMismatch);
  fs::remove_all(dir);
}

TEST_CASE("ablation suites") {
  model::SitConfig base;
  base.encoder_layers = 4;
  base.layer_pattern = "GSGS";
  const AblationOptions opts;
  for (auto s : {Suite::kPatterns, Suite::kProportion, Suite::kSharing, Suite::kSbt}) {
    const auto vs = suite_variants(s, base, {}, opts);
    CHECK(vs.size() == 4);
    CHECK(parse_suite(to_string(s)) == s);
  }
  const auto patterns = suite_variants(Suite::kPatterns, base, {}, opts);
  for (const auto& v : patterns) CHECK(v.model.layer_pattern == "SSSS");
  CHECK(patterns[3].model.pattern == model::Pattern::structured());
  const auto sbt = suite_variants(Suite::kSbt, base, {}, opts);
  CHECK(sbt[1].data.source == SourceMode::kSbt);
  CHECK_THROWS(parse_suite("depth"));
}

TEST_CASE("ablation rows are reproducible") {
  const auto train_corpus = gen_corpus(8, 25, Task::kDataflow);
  const auto test_corpus = gen_corpus(3, 26, Task::kDataflow);
  model::SitConfig base = small_model({});
  base.src_vocab = base.tgt_vocab = 0;
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_epochs = 1;
  tc.eval_beam = 2;
  AblationOptions opts;
  opts.window = opts.partners = 3;
  opts.seeds = {0, 1};
  opts.threads = 1;
  auto vs = suite_variants(Suite::kPatterns, base, small_data(), opts);
  const auto a = run_ablation(vs, tc, train_corpus, test_corpus, opts);
  opts.threads = 2;
  const auto b = run_ablation(vs, tc, train_corpus, test_corpus, opts);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].variant == b[i].variant);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].bleu == b[i].bleu);
    CHECK(a[i].rouge_l == b[i].rouge_l);
  }
  CHECK(a[0].variant == "full");
  CHECK(a[1].seed == 1);
  CHECK(metrics_csv(a).rfind("variant,seed,bleu,rouge_l,epochs,seconds_per_epoch\n", 0) == 0);
}
