#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sit/codegraph/builder.hpp"
#include "sit/codegraph/graph_io.hpp"
#include "sit/error.hpp"
#include "sit/minilang/parser.hpp"
#include "sit/model/search.hpp"
#include "sit/trainer/metrics.hpp"
#include "sit/trainer/train.hpp"

namespace py = pybind11;
using namespace sit;

namespace {

codegraph::GraphOptions graph_options(double alpha, double beta, double gamma, const std::string& dep_mode,
                                      std::size_t max_len) {
  codegraph::GraphOptions o;
  o.weights = {alpha, beta, gamma};
  if (dep_mode == "defuse") o.dep_mode = codegraph::DepMode::kDefUse;
  else if (dep_mode == "allpairs") o.dep_mode = codegraph::DepMode::kAllPairs;
  else throw py::value_error("dep_mode must be 'defuse' or 'allpairs'");
  o.max_len = max_len;
  return o;
}

py::dict graph_dict(const codegraph::MultiViewGraph& g) {
  py::dict d;
  d["tokens"] = g.tokens;
  d["ast"] = g.ast.edges();
  d["flow"] = g.flow.edges();
  d["dep"] = g.dep.edges();
  std::vector<std::vector<double>> combined(g.size(), std::vector<double>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) combined[i][j] = g.at(i, j);
  d["combined"] = combined;
  d["weights"] = py::make_tuple(g.weights.alpha, g.weights.beta, g.weights.gamma);
  return d;
}

// A trained run loaded from disk.
class Run {
 public:
  explicit Run(const std::string& dir)
      : files_(trainer::load_run_files(dir)), model_(trainer::load_model<float>(dir, files_)) {}

  std::string summarize(const std::string& code, int beam) const {
    trainer::CorpusEntry entry{code, ""};
    const auto ex = trainer::make_example(entry, files_.vocabs, files_.data, files_.model.max_tgt_len);
    const auto out = trainer::decode_all(*model_, {ex}, beam);
    std::string s;
    for (const auto& w : files_.vocabs.tgt.decode(out.front())) s += (s.empty() ? "" : " ") + w;
    return s;
  }

  py::dict evaluate(const std::vector<std::pair<std::string, std::string>>& pairs, int beam) const {
    std::vector<trainer::CorpusEntry> corpus;
    for (const auto& [c, s] : pairs) corpus.push_back({c, s});
    const auto r = trainer::evaluate(*model_, files_, corpus, beam);
    py::dict d;
    d["bleu"] = r.bleu;
    d["rouge_l"] = r.rouge_l;
    d["hypotheses"] = r.hypotheses;
    return d;
  }

  std::size_t param_count() const { return model_->param_count(); }

 private:
  trainer::RunFiles files_;
  std::unique_ptr<model::SitModel<float>> model_;
};

}  // namespace

PYBIND11_MODULE(_sit, m) {
  m.doc() = "Structure-induced transformer for code summarization";

  static py::exception<Error> error(m, "SitError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object inst = exc(std::string(e.what()));
      inst.attr("code") = e.code();
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  m.def(
      "lex",
      [](const std::string& source) {
        std::vector<py::tuple> out;
        for (const auto& t : minilang::lex(source))
          out.push_back(py::make_tuple(std::string(minilang::to_string(t.kind)), t.lexeme, t.line, t.col));
        return out;
      },
      py::arg("source"), "Tokens as (kind, lexeme, line, col) tuples.");
  m.def(
      "parse", [](const std::string& source) { return minilang::to_sexpr(minilang::parse_source(source)); },
      py::arg("source"), "S-expression of the syntax tree.");
  m.def(
      "build_graph",
      [](const std::string& source, double alpha, double beta, double gamma, const std::string& dep_mode,
         std::size_t max_len) {
        return graph_dict(codegraph::build_graph(source, graph_options(alpha, beta, gamma, dep_mode, max_len)));
      },
      py::arg("source"), py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("gamma") = 1.0,
      py::arg("dep_mode") = "defuse", py::arg("max_len") = 400);
  m.def(
      "graph_json",
      [](const std::string& source) { return codegraph::serialize_graph(codegraph::build_graph(source)); },
      py::arg("source"));
  m.def(
      "sbt", [](const std::string& source) { return codegraph::sbt_flatten(minilang::parse_source(source)); },
      py::arg("source"));
  m.def(
      "gen_corpus",
      [](int n, std::uint64_t seed, const std::string& task) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : trainer::gen_corpus(n, seed, trainer::parse_task(task))) out.emplace_back(e.code, e.summary);
        return out;
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("task") = "mixed");
  m.def(
      "bleu",
      [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
        std::vector<trainer::Sentence> h, r;
        for (const auto& s : hyps) h.push_back(trainer::summary_tokens(s));
        for (const auto& s : refs) r.push_back(trainer::summary_tokens(s));
        return trainer::bleu(h, r);
      },
      py::arg("hypotheses"), py::arg("references"));
  m.def(
      "rouge_l",
      [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs, double beta) {
        std::vector<trainer::Sentence> h, r;
        for (const auto& s : hyps) h.push_back(trainer::summary_tokens(s));
        for (const auto& s : refs) r.push_back(trainer::summary_tokens(s));
        return trainer::rouge_l(h, r, beta);
      },
      py::arg("hypotheses"), py::arg("references"), py::arg("beta") = 1.2);
  m.def(
      "train",
      [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& out_dir,
         const std::string& config_json) {
        std::vector<trainer::CorpusEntry> corpus;
        for (const auto& [c, s] : pairs) corpus.push_back({c, s});
        trainer::RunFiles files;
        const auto cfg = config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json);
        if (cfg.contains("model")) cfg["model"].get_to(files.model);
        if (cfg.contains("train")) cfg["train"].get_to(files.train);
        files.data.graph.max_len = static_cast<std::size_t>(files.model.max_src_len);
        files.vocabs = trainer::build_vocabs(corpus, files.data);
        files.model.src_vocab = static_cast<int>(files.vocabs.src.size());
        files.model.tgt_vocab = static_cast<int>(files.vocabs.tgt.size());
        const auto examples = trainer::make_examples(corpus, files.vocabs, files.data, files.model.max_tgt_len);
        py::gil_scoped_release release;
        auto result = trainer::train<float>(files.model, files.train, examples);
        trainer::save_run(out_dir, *result.model, files, result.epochs);
        return trainer::epoch_log_csv(result.epochs);
      },
      py::arg("corpus"), py::arg("out_dir"), py::arg("config_json") = "",
      "Train on (code, summary) pairs and save the run; returns the epoch log CSV.");

  py::class_<Run>(m, "Run")
      .def(py::init<const std::string&>(), py::arg("run_dir"))
      .def("summarize", &Run::summarize, py::arg("code"), py::arg("beam") = 4)
      .def("evaluate", &Run::evaluate, py::arg("corpus"), py::arg("beam") = 4)
      .def_property_readonly("param_count", &Run::param_count);
}
