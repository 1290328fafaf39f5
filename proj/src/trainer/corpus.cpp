#include "sit/trainer/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sit/error.hpp"

namespace sit::trainer {

namespace {

const std::vector<std::string> kNames = {
    "price", "count", "total", "value",  "size",   "width",  "height", "offset",
    "score", "limit", "index", "amount", "rate",   "weight", "speed",  "level",
    "depth", "ratio", "delta", "factor", "margin", "budget", "length", "balance"};

const std::vector<std::string> kFuncs = {"process", "compute", "handle", "update",
                                         "resolve", "adjust",  "convert", "prepare"};

const std::vector<std::string> kVerbs = {"get",   "set",   "compute", "update", "find",
                                         "check", "parse", "load",    "build",  "reset"};
const std::vector<std::string> kNouns = {"user",  "total", "price", "file",  "name",
                                         "count", "item",  "value", "state", "buffer"};

struct OpInfo {
  const char* op;
  const char* word;
};
const OpInfo kOps[] = {{"+", "incremented"}, {"*", "scaled"}, {"-", "decremented"}};

// Portable helpers; std distributions differ between standard libraries.
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
bool chance(std::mt19937_64& rng, double p) { return unit(rng) < p; }

template <typename V>
void shuffle(V& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

std::string constant(std::mt19937_64& rng) { return std::to_string(1 + pick(rng, 9)); }

std::string binop(std::mt19937_64& rng) { return kOps[pick(rng, 3)].op; }

struct Stmt {
  double key;
  std::string text;  // may span lines; indented relative to the body
};

std::string render(const std::string& fname, const std::vector<std::string>& params,
                   std::vector<Stmt> body, const std::string& ret) {
  std::stable_sort(body.begin(), body.end(), [](const Stmt& a, const Stmt& b) { return a.key < b.key; });
  std::ostringstream out;
  out << "def " << fname << "(";
  for (std::size_t i = 0; i < params.size(); ++i) out << (i ? ", " : "") << params[i];
  out << "):\n";
  for (const auto& s : body) {
    std::istringstream lines(s.text);
    for (std::string line; std::getline(lines, line);) out << "    " << line << "\n";
  }
  out << "    return " << ret << "\n";
  return out.str();
}

CorpusEntry dataflow(std::mt19937_64& rng) {
  auto names = kNames;
  shuffle(names, rng);
  std::vector<std::string> params(names.begin(), names.begin() + 3);
  const std::size_t origin_at = pick(rng, 3);
  const std::string origin = params[origin_at];
  std::vector<std::string> others;
  for (std::size_t i = 0; i < 3; ++i)
    if (i != origin_at) others.push_back(params[i]);
  const std::size_t chain_len = 1 + pick(rng, 2);
  std::vector<std::string> chain(names.begin() + 3, names.begin() + 3 + static_cast<long>(chain_len));
  std::vector<std::string> spare(names.begin() + 3 + static_cast<long>(chain_len),
                                 names.begin() + 6 + static_cast<long>(chain_len));

  std::vector<Stmt> body;
  const OpInfo& first = kOps[pick(rng, 3)];
  // Chain statements sit at keys 1..chain_len.
  for (std::size_t i = 0; i < chain_len; ++i) {
    const std::string src = i == 0 ? origin : chain[i - 1];
    const std::string op = i == 0 ? first.op : binop(rng);
    body.push_back({static_cast<double>(i + 1), chain[i] + " = " + src + " " + op + " " + constant(rng)});
  }
  const double end = static_cast<double>(chain_len + 1);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * (0.05 + 0.9 * unit(rng)); };
  auto from_other = [&](const std::string& target) {
    return target + " = " + others[pick(rng, others.size())] + " " + binop(rng) + " " + constant(rng);
  };
  // Earlier definitions of chain names, overwritten by the chain itself.
  for (std::size_t i = 0; i < chain_len; ++i)
    if (chance(rng, 0.6)) body.push_back({between(0, static_cast<double>(i + 1)), from_other(chain[i])});
  // Redefinitions after the last read, which must not affect the result.
  for (std::size_t i = 0; i + 1 < chain_len; ++i)
    if (chance(rng, 0.5)) body.push_back({between(static_cast<double>(i + 2), end), from_other(chain[i])});
  if (chance(rng, 0.3)) body.push_back({between(1, end), from_other(origin)});
  // Unrelated temporaries, possibly reading the origin too.
  const std::size_t free_count = 1 + pick(rng, 2);
  for (std::size_t i = 0; i < free_count; ++i)
    body.push_back({between(0, end), spare[i] + " = " + params[pick(rng, 3)] + " " + binop(rng) + " " +
                                         constant(rng)});
  if (chance(rng, 0.3)) {
    const std::string q = others[pick(rng, others.size())];
    body.push_back({between(0, end), "if " + q + " > " + constant(rng) + ":\n    " + spare[2] + " = " + q +
                                         " - " + constant(rng)});
  }

  const std::string fname = kFuncs[pick(rng, kFuncs.size())];
  return {render(fname, params, std::move(body), chain.back()),
          std::string("returns the ") + first.word + " value of " + origin};
}

CorpusEntry rename(std::mt19937_64& rng) {
  std::vector<std::string> parts = {kVerbs[pick(rng, kVerbs.size())], kNouns[pick(rng, kNouns.size())]};
  if (chance(rng, 0.5)) {
    std::string n = kNouns[pick(rng, kNouns.size())];
    if (n != parts[1]) parts.push_back(n);
  }
  std::string fname;
  const bool snake = chance(rng, 0.3);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i == 0) {
      fname = parts[0];
    } else if (snake) {
      fname += "_" + parts[i];
    } else {
      std::string p = parts[i];
      p[0] = static_cast<char>(p[0] - 'a' + 'A');
      fname += p;
    }
  }
  auto names = kNames;
  shuffle(names, rng);
  const std::size_t n_params = 1 + pick(rng, 3);
  std::vector<std::string> params(names.begin(), names.begin() + static_cast<long>(n_params));
  std::vector<Stmt> body;
  std::vector<std::string> live = params;
  const std::size_t n_stmts = 1 + pick(rng, 3);
  for (std::size_t i = 0; i < n_stmts; ++i) {
    const std::string target = names[n_params + i];
    body.push_back({static_cast<double>(i), target + " = " + live[pick(rng, live.size())] + " " + binop(rng) +
                                                " " + constant(rng)});
    live.push_back(target);
  }
  std::string summary;
  for (const auto& p : parts) summary += (summary.empty() ? "" : " ") + p;
  return {render(fname, params, std::move(body), live.back()), summary};
}

}  // namespace

Task parse_task(const std::string& s) {
  if (s == "rename") return Task::kRename;
  if (s == "dataflow") return Task::kDataflow;
  if (s == "mixed") return Task::kMixed;
  throw Error("UsageError", "unknown task '" + s + "' (expected rename, dataflow or mixed)");
}

std::string to_string(Task t) {
  switch (t) {
    case Task::kRename: return "rename";
    case Task::kDataflow: return "dataflow";
    case Task::kMixed: return "mixed";
  }
  return "?";
}

std::vector<CorpusEntry> gen_corpus(int n, std::uint64_t seed, Task task) {
  if (n < 1) throw Error("UsageError", "corpus size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<CorpusEntry> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Task t = task;
    if (t == Task::kMixed) t = chance(rng, 0.5) ? Task::kDataflow : Task::kRename;
    out.push_back(t == Task::kDataflow ? dataflow(rng) : rename(rng));
  }
  return out;
}

std::string to_jsonl(const std::vector<CorpusEntry>& corpus) {
  std::string out;
  for (const auto& e : corpus) {
    out += nlohmann::json{{"code", e.code}, {"summary", e.summary}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<CorpusEntry> from_jsonl(const std::string& text) {
  std::vector<CorpusEntry> out;
  std::istringstream in(text);
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("code") || !j["code"].is_string() || !j.contains("summary") ||
        !j["summary"].is_string())
      throw FormatError("corpus line " + std::to_string(lineno) + ": expected {\"code\", \"summary\"} strings");
    out.push_back({j["code"].get<std::string>(), j["summary"].get<std::string>()});
  }
  return out;
}

void write_corpus(const std::string& path, const std::vector<CorpusEntry>& corpus) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("IOError", "cannot write " + path);
  f << to_jsonl(corpus);
  if (!f) throw Error("IOError", "write failed: " + path);
}

std::vector<CorpusEntry> read_corpus(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("IOError", "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return from_jsonl(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace sit::trainer
