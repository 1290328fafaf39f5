#include "sit/trainer/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "sit/error.hpp"
#include "sit/model/config.hpp"

namespace sit::trainer {

namespace {
const char* const kSpecials[] = {"<pad>", "<unk>", "<root>", "<bos>", "<eos>"};
}

Vocab::Vocab() {
  for (const char* s : kSpecials) add(s);
}

void Vocab::add(const std::string& token) {
  stoi_.emplace(token, static_cast<int>(itos_.size()));
  itos_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sequences, int min_freq) {
  std::map<std::string, int> freq;
  for (const auto& seq : sequences)
    for (const auto& t : seq) ++freq[t];
  std::vector<std::pair<std::string, int>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : items)
    if (n >= min_freq && !v.stoi_.count(tok)) v.add(tok);
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = stoi_.find(token);
  return it == stoi_.end() ? model::special::kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= itos_.size())
    throw Error("VocabError", "token id " + std::to_string(id) + " out of range");
  return itos_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int i : ids)
    if (i >= model::special::kCount || i == model::special::kUnk) out.push_back(token(i));
  return out;
}

nlohmann::json Vocab::to_json() const { return {{"tokens", itos_}}; }

Vocab Vocab::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
    throw FormatError("vocab: missing \"tokens\" array");
  std::vector<std::string> toks;
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw FormatError("vocab: tokens must be strings");
    toks.push_back(t.get<std::string>());
  }
  Vocab v;
  for (std::size_t i = 0; i < std::size(kSpecials); ++i)
    if (i >= toks.size() || toks[i] != kSpecials[i])
      throw FormatError("vocab: reserved token " + std::string(kSpecials[i]) + " missing");
  for (std::size_t i = std::size(kSpecials); i < toks.size(); ++i) {
    if (v.stoi_.count(toks[i])) throw FormatError("vocab: duplicate token " + toks[i]);
    v.add(toks[i]);
  }
  return v;
}

std::vector<std::string> summary_tokens(const std::string& summary) {
  std::istringstream in(summary);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace sit::trainer
