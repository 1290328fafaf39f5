#include <doctest.h>

#include <random>
#include <set>

#include "sit/codegraph/builder.hpp"
#include "sit/codegraph/graph_io.hpp"
#include "sit/error.hpp"
#include "sit/minilang/parser.hpp"
#include "sit/trainer/corpus.hpp"

using namespace sit;
using namespace sit::codegraph;
using Edges = std::set<std::pair<std::size_t, std::size_t>>;

namespace {

Edges edge_set(const ViewMatrix& m) {
  const auto e = m.edges();
  return {e.begin(), e.end()};
}

void check_view_shape(const ViewMatrix& m) {
  for (std::size_t i = 0; i < m.n(); ++i) {
    CHECK(m.at(i, i));
    for (std::size_t j = 0; j < m.n(); ++j) CHECK(m.at(i, j) == m.at(j, i));
  }
}

}  // namespace

TEST_CASE("ast view of b = a + 1") {
  const auto ast = minilang::parse_source("b = a + 1");
  // terminals: 0 b, 1 =, 2 a, 3 +, 4 1
  CHECK(edge_set(build_ast_view(ast)) == Edges{{0, 2}, {2, 3}, {2, 4}, {3, 4}});
}

TEST_CASE("ast view of a single terminal") {
  const auto ast = minilang::parse_source("x");
  const auto v = build_ast_view(ast);
  CHECK(v.n() == 1);
  CHECK(v.at(0, 0));
}

TEST_CASE("nested unary chain gives one edge per level") {
  for (int d = 1; d <= 12; ++d) {
    const auto ast = minilang::parse_source(std::string(static_cast<std::size_t>(d), '-') + "x");
    CHECK(build_ast_view(ast).edge_count() == static_cast<std::size_t>(d));
  }
}

TEST_CASE("flow view cliques") {
  const auto ast = minilang::parse_source("b = a + 1");
  const auto flow = build_flow_view(ast, minilang::statements(ast));
  CHECK(flow.edge_count() == 10);
  const auto two = minilang::parse_source("x = y\nreturn 1 + 2");
  // spans of sizes 3 and 4
  CHECK(build_flow_view(two, minilang::statements(two)).edge_count() == 3 + 6);
  const auto small = minilang::parse_source("f()\nreturn y");
  // spans [f,(,)] and [return,y]
  CHECK(build_flow_view(small, minilang::statements(small)).edge_count() == 3 + 1);
  const auto empty = minilang::parse_source("");
  CHECK(build_flow_view(empty, minilang::statements(empty)).n() == 0);
}

TEST_CASE("dep view def-use chains") {
  const auto ast = minilang::parse_source("b = a + 1\nprint(b)");
  // terminals: 0 b 1 = 2 a 3 + 4 1 5 print 6 ( 7 b 8 )
  CHECK(edge_set(build_dep_view(ast)) == Edges{{0, 7}});

  const auto redef = minilang::parse_source("x = 1\nx = 2\ny = x");
  // 0 x 1 = 2 1 | 3 x 4 = 5 2 | 6 y 7 = 8 x
  CHECK(edge_set(build_dep_view(redef)) == Edges{{3, 8}});
  CHECK(edge_set(build_dep_view(redef, DepMode::kAllPairs)) == Edges{{0, 3}, {0, 8}, {3, 8}});

  const auto unique = minilang::parse_source("a = 1\nb = 2\nc = 3");
  CHECK(build_dep_view(unique).edge_count() == 0);
}

TEST_CASE("dep view uses read before the definition") {
  const auto ast = minilang::parse_source("def f(x):\n    x = x + 1\n    return x");
  // 0 def 1 f 2 ( 3 x 4 ) 5 : | 6 x 7 = 8 x 9 + 10 1 | 11 return 12 x
  CHECK(edge_set(build_dep_view(ast)) == Edges{{3, 8}, {6, 12}});
}

TEST_CASE("dep view merges branches and follows loops") {
  // 0 x 1 = 2 1 | 3 if 4 c 5 : | 6 x 7 = 8 2 | 9 y 10 = 11 x
  const auto branch = minilang::parse_source("x = 1\nif c:\n    x = 2\ny = x");
  CHECK(edge_set(build_dep_view(branch)) == Edges{{0, 11}, {6, 11}});
  // 0 if 1 c 2 : | 3 x 4 = 5 1 | 6 else 7 : | 8 x 9 = 10 2 | 11 y 12 = 13 x
  const auto both = minilang::parse_source("if c:\n    x = 1\nelse:\n    x = 2\ny = x");
  CHECK(edge_set(build_dep_view(both)) == Edges{{3, 13}, {8, 13}});
  // 0 if 1 c 2 : | 3 x 4 = 5 1 | 6 elif 7 d 8 : | 9 y 10 = 11 x | 12 z 13 = 14 x
  const auto chain = minilang::parse_source("if c:\n    x = 1\nelif d:\n    y = x\nz = x");
  CHECK(edge_set(build_dep_view(chain)) == Edges{{3, 14}});
  // 0 s 1 = 2 0 | 3 while 4 s 5 < 6 9 7 : | 8 s 9 = 10 s 11 + 12 1
  const auto loop = minilang::parse_source("s = 0\nwhile s < 9:\n    s = s + 1");
  CHECK(edge_set(build_dep_view(loop)) == Edges{{0, 4}, {0, 10}, {4, 8}, {8, 10}});
}

TEST_CASE("combine weights") {
  const auto ast = minilang::parse_source("b = a + 1");
  const auto a = build_ast_view(ast);
  const auto f = build_flow_view(ast, minilang::statements(ast));
  const auto d = build_dep_view(ast);
  const auto g = combine(a, f, d);
  // (b, a) is in both ast and flow
  CHECK(g.at(1, 3) == 2.0);
  CHECK(g.at(1, 2) == 1.0);  // (b, =) flow only
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(g.at(0, k) > 0);
    CHECK(g.at(k, 0) > 0);
    CHECK(g.at(k, k) > 0);
  }
  const auto ast_only = combine(a, f, d, {1, 0, 0});
  for (std::size_t i = 1; i < g.size(); ++i)
    for (std::size_t j = 1; j < g.size(); ++j)
      CHECK(ast_only.at(i, j) == static_cast<double>(a.at(i - 1, j - 1)));
  const auto none = combine(a, f, d, {0, 0, 0});
  for (std::size_t i = 1; i < g.size(); ++i)
    for (std::size_t j = 1; j < g.size(); ++j) CHECK(none.allowed(i, j) == (i == j));
  CHECK_THROWS_AS(combine(a, f, d, {1, -1, 1}), NegativeWeight);
  CHECK_THROWS_AS(combine(a, ViewMatrix(View::kFlow, 2), d), ShapeError);
}

TEST_CASE("subtokenization") {
  CHECK(split_identifier("getDisableInteractions") == std::vector<std::string>{"get", "disable", "interactions"});
  CHECK(split_identifier("change_dict") == std::vector<std::string>{"change", "dict"});
  CHECK(split_identifier("x") == std::vector<std::string>{"x"});
  CHECK(split_identifier("parseHTTPResponse") == std::vector<std::string>{"parse", "http", "response"});
  CHECK(split_identifier("_") == std::vector<std::string>{"_"});
  const std::vector<std::string> terms = {"userName", "=", "42", "x"};
  const auto m = subtokenize(terms);
  CHECK(m.pieces == std::vector<std::string>{"user", "name", "=", "42", "x"});
  CHECK(m.origin == std::vector<std::size_t>{0, 0, 1, 2, 3});
  CHECK(subtokenize(terms, SubtokenMode::kRaw).pieces == terms);
}

TEST_CASE("subtoken expansion preserves reachability") {
  const auto corpus = trainer::gen_corpus(60, 5, trainer::Task::kRename);
  for (const auto& e : corpus) {
    const auto ast = minilang::parse_source(e.code);
    const auto view = build_ast_view(ast);
    const auto map = subtokenize(ast.terminal_lexemes());
    const auto ex = expand(view, map);
    for (std::size_t p = 0; p < map.pieces.size(); ++p)
      for (std::size_t q = 0; q < map.pieces.size(); ++q)
        CHECK(ex.at(p, q) == (map.origin[p] == map.origin[q] || view.at(map.origin[p], map.origin[q])));
  }
}

TEST_CASE("views are symmetric with unit diagonal on generated programs") {
  const auto corpus = trainer::gen_corpus(100, 9, trainer::Task::kMixed);
  for (const auto& e : corpus) {
    const auto g = build_graph(e.code);
    check_view_shape(g.ast);
    check_view_shape(g.flow);
    check_view_shape(g.dep);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        CHECK(g.at(i, j) == g.at(j, i));
        if (i > 0 && j > 0)
          CHECK(g.at(i, j) == 1.0 * g.ast.at(i - 1, j - 1) + 1.0 * g.flow.at(i - 1, j - 1) +
                                  1.0 * g.dep.at(i - 1, j - 1));
      }
  }
}

TEST_CASE("adding a statement never removes edges") {
  std::mt19937_64 rng(3);
  const auto corpus = trainer::gen_corpus(50, 21, trainer::Task::kDataflow);
  for (const auto& e : corpus) {
    // Split off the final return line and append a fresh statement instead.
    const auto cut = e.code.rfind("    return");
    const std::string head = e.code.substr(0, cut);
    const std::string longer = head + "    extra = " + std::to_string(rng() % 9) + "\n" + e.code.substr(cut);
    const std::string shorter = e.code;
    const auto a = build_graph(shorter, {{}, DepMode::kDefUse, SubtokenMode::kRaw});
    const auto b = build_graph(longer, {{}, DepMode::kDefUse, SubtokenMode::kRaw});
    // Tokens before the insertion keep their index; later ones shift by 3.
    const std::size_t n_head = minilang::lex(head).size();
    auto map = [&](std::size_t i) { return i < n_head ? i : i + 3; };
    for (const ViewMatrix* va : {&a.ast, &a.flow, &a.dep}) {
      const ViewMatrix& vb = va == &a.ast ? b.ast : va == &a.flow ? b.flow : b.dep;
      for (auto [i, j] : va->edges()) CHECK(vb.at(map(i), map(j)));
    }
  }
}

TEST_CASE("truncation keeps graph and tokens consistent") {
  const auto corpus = trainer::gen_corpus(10, 2, trainer::Task::kDataflow);
  GraphOptions opts;
  opts.max_len = 12;
  for (const auto& e : corpus) {
    const auto g = build_graph(e.code, opts);
    CHECK(g.tokens.size() == 11);
    CHECK(g.size() == 12);
    const auto full = build_graph(e.code);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j) CHECK(g.at(i, j) == full.at(i, j));
  }
}

TEST_CASE("sbt flattening") {
  const auto x = minilang::parse(minilang::lex("x"));
  // Module(Expr(x)) is three nodes; the single terminal alone is the innermost group.
  const auto seq = sbt_flatten(x);
  CHECK(seq.size() == 12);
  CHECK(std::vector<std::string>(seq.begin() + 4, seq.begin() + 8) == std::vector<std::string>{"(", "x", ")", "x"});
  const auto assign = minilang::parse_source("b = 1");
  // Module, Assign, b, =, 1: 5 nodes
  CHECK(sbt_flatten(assign).size() == 20);
  const auto corpus = trainer::gen_corpus(30, 4, trainer::Task::kMixed);
  for (const auto& e : corpus) {
    const auto ast = minilang::parse_source(e.code);
    CHECK(sbt_flatten(ast).size() == 4 * ast.size());
    CHECK(sbt_flatten(ast).size() > ast.terminals().size());
    const auto g = build_sbt_graph(e.code);
    CHECK(g.tokens.size() > build_graph(e.code).tokens.size());
    CHECK(g.ast.edge_count() + g.flow.edge_count() + g.dep.edge_count() == 0);
  }
}

TEST_CASE("graph json round trip") {
  const auto corpus = trainer::gen_corpus(40, 8, trainer::Task::kMixed);
  for (const auto& e : corpus) {
    const auto g = build_graph(e.code, {{1.0, 0.5, 2.0}});
    const std::string s = serialize_graph(g);
    const auto back = deserialize_graph(s);
    CHECK(back.tokens == g.tokens);
    CHECK(back.ast == g.ast);
    CHECK(back.flow == g.flow);
    CHECK(back.dep == g.dep);
    CHECK(back.weights == g.weights);
    CHECK(back.combined == g.combined);
    CHECK(serialize_graph(back) == s);
  }
}

TEST_CASE("hand-written graph file") {
  const auto g = deserialize_graph(
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [[0, 1]], "flow": [], "dep": [[1, 0]]},
          "weights": [1, 1, 0.5]})");
  REQUIRE(g.size() == 3);
  CHECK(g.tokens == std::vector<std::string>{"x", "y"});
  CHECK(g.at(0, 0) == 1.0);
  CHECK(g.at(0, 2) == 1.0);
  CHECK(g.at(1, 2) == 1.5);
  CHECK(g.at(2, 1) == 1.5);
  CHECK(g.at(1, 1) == 2.5);
}

TEST_CASE("malformed graph files") {
  const char* bad[] = {
      R"({"n": 3, "tokens": ["x", "y"], "views": {"ast": [], "flow": [], "dep": []}, "weights": [1, 1, 1]})",
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [[0, 2]], "flow": [], "dep": []}, "weights": [1, 1, 1]})",
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [[0]], "flow": [], "dep": []}, "weights": [1, 1, 1]})",
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [], "flow": []}, "weights": [1, 1, 1]})",
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [], "flow": [], "dep": []}, "weights": [1, -1, 1]})",
      R"({"n": 2, "tokens": ["x", 3], "views": {"ast": [], "flow": [], "dep": []}, "weights": [1, 1, 1]})",
      R"({"n": 2, "tokens": ["x", "y"], "views": {"ast": [], "flow": [], "dep": []}})",
      R"(not json)",
      R"([])",
  };
  for (const char* text : bad) CHECK_THROWS_AS(deserialize_graph(text), FormatError);
}
