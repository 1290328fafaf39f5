#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sit::trainer {

struct CorpusEntry {
  std::string code;
  std::string summary;

  bool operator==(const CorpusEntry&) const = default;
};

enum class Task {
  kRename,    // summary spells out the function name
  kDataflow,  // summary names the parameter the returned value derives from
  kMixed,
};

Task parse_task(const std::string& s);
std::string to_string(Task t);

// Deterministic in (n, seed, task).
std::vector<CorpusEntry> gen_corpus(int n, std::uint64_t seed, Task task);

// JSON Lines, one {"code": ..., "summary": ...} object per line.
std::string to_jsonl(const std::vector<CorpusEntry>& corpus);
std::vector<CorpusEntry> from_jsonl(const std::string& text);
void write_corpus(const std::string& path, const std::vector<CorpusEntry>& corpus);
std::vector<CorpusEntry> read_corpus(const std::string& path);

}  // namespace sit::trainer
