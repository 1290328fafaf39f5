#include "sit/codegraph/graph_io.hpp"

#include <json.hpp>

#include "sit/error.hpp"

namespace sit::codegraph {

using nlohmann::json;

std::string serialize_graph(const MultiViewGraph& g) {
  json j;
  j["n"] = g.tokens.size();
  j["tokens"] = g.tokens;
  json views = json::object();
  for (const ViewMatrix* v : {&g.ast, &g.flow, &g.dep}) {
    json edges = json::array();
    for (auto [a, b] : v->edges()) edges.push_back({a, b});
    views[std::string(to_string(v->view()))] = std::move(edges);
  }
  j["views"] = std::move(views);
  j["weights"] = {g.weights.alpha, g.weights.beta, g.weights.gamma};
  return j.dump();
}

MultiViewGraph deserialize_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw FormatError("graph file must be a JSON object");
    for (const char* key : {"n", "tokens", "views", "weights"})
      if (!j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
    if (!j["n"].is_number_unsigned()) throw FormatError("\"n\" must be a non-negative integer");
    const auto n = j["n"].get<std::size_t>();
    auto tokens = j["tokens"].get<std::vector<std::string>>();
    if (tokens.size() != n)
      throw FormatError("\"n\" is " + std::to_string(n) + " but " +
                        std::to_string(tokens.size()) + " tokens are listed");
    const auto& w = j["weights"];
    if (!w.is_array() || w.size() != 3) throw FormatError("\"weights\" must have 3 entries");

    auto read_view = [&](View kind) {
      ViewMatrix m(kind, n);
      const std::string name(to_string(kind));
      if (!j["views"].contains(name)) throw FormatError("missing view \"" + name + "\"");
      for (const auto& e : j["views"][name]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
            !e[1].is_number_unsigned())
          throw FormatError("view \"" + name + "\" has a malformed edge");
        const auto a = e[0].get<std::size_t>();
        const auto b = e[1].get<std::size_t>();
        if (a >= n || b >= n)
          throw FormatError("view \"" + name + "\" edge index out of range for n=" +
                            std::to_string(n));
        m.connect(a, b);
      }
      return m;
    };
    auto g = combine(read_view(View::kAst), read_view(View::kFlow), read_view(View::kDep),
                     {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
    g.tokens = std::move(tokens);
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph file has a wrong field type: ") + e.what());
  } catch (const NegativeWeight& e) {
    throw FormatError(e.what());
  }
}

}  // namespace sit::codegraph
