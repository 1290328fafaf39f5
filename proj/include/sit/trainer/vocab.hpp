#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace sit::trainer {

// Token <-> id table. Ids 0..4 are <pad> <unk> <root> <bos> <eos>; the rest
// are ordered by descending frequency, ties by string.
class Vocab {
 public:
  Vocab();

  static Vocab build(const std::vector<std::vector<std::string>>& sequences, int min_freq = 1);

  int id(const std::string& token) const;  // <unk> when absent
  const std::string& token(int id) const;
  std::size_t size() const { return itos_.size(); }
  const std::vector<std::string>& tokens() const { return itos_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  // Drops special tokens.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  bool operator==(const Vocab& o) const { return itos_ == o.itos_; }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

 private:
  void add(const std::string& token);
  std::vector<std::string> itos_;
  std::unordered_map<std::string, int> stoi_;
};

// Lowercased whitespace tokens of a summary.
std::vector<std::string> summary_tokens(const std::string& summary);

}  // namespace sit::trainer
