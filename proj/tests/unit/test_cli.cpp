#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "sit_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run sit(const std::string& args, const std::string& stdin_file = "") {
  const auto out = work() / "stdout.txt", err = work() / "stderr.txt";
  std::string cmd = std::string(SIT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  if (!stdin_file.empty()) cmd += " <" + stdin_file;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string p(const std::string& rel) { return (work() / rel).string(); }

}  // namespace

TEST_CASE("usage errors exit with 2 and a json message") {
  auto r = sit("gen-corpus --n 0 --out " + p("x"));
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.err);
  CHECK(j.contains("error"));
  CHECK(j.contains("message"));
  CHECK(sit("no-such-command").code == 2);
  CHECK(sit("gen-corpus --task sorting --n 3 --out " + p("x")).code == 2);
}

TEST_CASE("end to end pipeline") {
  REQUIRE(sit("gen-corpus --n 24 --seed 3 --task dataflow --out " + p("data")).code == 0);
  REQUIRE(fs::exists(p("data/corpus.jsonl")));
  const auto manifest = nlohmann::json::parse(slurp(p("data/manifest.json")));
  CHECK(manifest["command"] == "gen-corpus");
  CHECK(manifest["seed"] == 3);
  for (const char* key : {"arguments", "config_paths", "git_describe", "timestamp", "output_directory"})
    CHECK(manifest.contains(key));
  // Same seed, same bytes.
  REQUIRE(sit("gen-corpus --n 24 --seed 3 --task dataflow --out " + p("data2")).code == 0);
  CHECK(slurp(p("data/corpus.jsonl")) == slurp(p("data2/corpus.jsonl")));

  REQUIRE(sit("build-graphs --corpus " + p("data/corpus.jsonl") + " --out " + p("graphs")).code == 0);
  CHECK(fs::exists(p("graphs/graphs/000000.json")));
  CHECK(fs::exists(p("graphs/graphs/000023.json")));
  const auto g = nlohmann::json::parse(slurp(p("graphs/graphs/000000.json")));
  CHECK(g["n"].get<std::size_t>() == g["tokens"].size());

  const std::string small = " --d-model 16 --heads 2 --d-ff 32 --encoder-layers 2 --decoder-layers 1"
                            " --layer-pattern GS --max-src-len 64 --max-tgt-len 10 --epochs 1 --batch-size 8";
  REQUIRE(sit("train --corpus " + p("data/corpus.jsonl") + " --valid " + p("data/corpus.jsonl") + " --out " +
              p("train") + small)
              .code == 0);
  for (const char* f : {"run/model.ckpt", "run/config.json", "run/vocab.json", "run/train_log.csv", "manifest.json"})
    CHECK(fs::exists(p(std::string("train/") + f)));
  const auto cfg = nlohmann::json::parse(slurp(p("train/run/config.json")));
  CHECK(cfg["model"]["d_model"] == 16);

  REQUIRE(sit("evaluate --run " + p("train/run") + " --corpus " + p("data/corpus.jsonl") + " --out " + p("eval") +
              " --beam 2")
              .code == 0);
  CHECK(slurp(p("eval/metrics.csv")).find("bleu") != std::string::npos);
  CHECK(slurp(p("eval/outputs.csv")).rfind("index,hypothesis,reference", 0) == 0);

  {
    std::ofstream src(p("prog.ml"));
    src << "def f(a):\n    b = a + 1\n    return b\n";
  }
  const auto s1 = sit("summarize --run " + p("train/run") + " " + p("prog.ml"));
  CHECK(s1.code == 0);
  const auto s2 = sit("summarize --run " + p("train/run") + " -", p("prog.ml"));
  CHECK(s2.code == 0);
  CHECK(s1.out == s2.out);
  {
    std::ofstream bad(p("bad.ml"));
    bad << "def f(a:\n";
  }
  const auto s3 = sit("summarize --run " + p("train/run") + " " + p("bad.ml"));
  CHECK(s3.code == 1);
  CHECK(nlohmann::json::parse(s3.err)["error"] == "ParseError");
}

TEST_CASE("config files are validated as a whole") {
  {
    std::ofstream c(p("bad.json"));
    c << R"({"model": {"d_model": 30, "heads": 4}, "train": {"lr": -1}})";
  }
  REQUIRE(sit("gen-corpus --n 4 --out " + p("tiny")).code == 0);
  const auto r = sit("train --corpus " + p("tiny/corpus.jsonl") + " --out " + p("t2") + " --config " + p("bad.json"));
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.err);
  REQUIRE(j.contains("violations"));
  CHECK(j["violations"].size() >= 2);
}

TEST_CASE("ablate writes one row per variant and seed") {
  REQUIRE(sit("gen-corpus --n 8 --seed 1 --task dataflow --out " + p("abl_train")).code == 0);
  REQUIRE(sit("gen-corpus --n 3 --seed 2 --task dataflow --out " + p("abl_test")).code == 0);
  {
    std::ofstream c(p("abl.json"));
    c << R"({"model": {"d_model": 16, "heads": 2, "d_ff": 32, "encoder_layers": 2, "decoder_layers": 1,
              "layer_pattern": "GS", "max_src_len": 64, "max_tgt_len": 10},
             "train": {"max_epochs": 1, "batch_size": 4, "eval_beam": 2}})";
  }
  const auto r = sit("ablate --suite patterns --corpus " + p("abl_train/corpus.jsonl") + " --test " +
                     p("abl_test/corpus.jsonl") + " --out " + p("abl") + " --config " + p("abl.json") +
                     " --seeds 0,1 --window 3 --partners 3 --threads 1");
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(p("abl/ablation.csv")));
  std::size_t lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  CHECK(lines == 1 + 4 * 2);
}
