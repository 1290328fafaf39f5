#include "sit/codegraph/subtoken.hpp"

#include <cctype>

namespace sit::codegraph {

namespace {

bool upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool identifier_like(std::string_view s) {
  return !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_');
}

}  // namespace

std::vector<std::string> split_identifier(std::string_view word) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= word.size()) {
    std::size_t end = word.find('_', start);
    if (end == std::string_view::npos) end = word.size();
    const std::string_view part = word.substr(start, end - start);
    std::size_t from = 0;
    for (std::size_t i = 1; i < part.size(); ++i) {
      const bool lower_to_upper = !upper(part[i - 1]) && upper(part[i]);
      const bool acronym_end = upper(part[i - 1]) && upper(part[i]) &&
                               i + 1 < part.size() && lower(part[i + 1]);
      if (lower_to_upper || acronym_end) {
        out.push_back(lowercase(part.substr(from, i - from)));
        from = i;
      }
    }
    if (from < part.size()) out.push_back(lowercase(part.substr(from)));
    start = end + 1;
  }
  if (out.empty()) out.emplace_back(word);
  return out;
}

SubtokenMap subtokenize(std::span<const std::string> terminals, SubtokenMode mode) {
  SubtokenMap m;
  for (std::size_t t = 0; t < terminals.size(); ++t) {
    const std::string& lex = terminals[t];
    if (mode == SubtokenMode::kRaw || !identifier_like(lex)) {
      m.pieces.push_back(lex);
      m.origin.push_back(t);
      continue;
    }
    for (auto& p : split_identifier(lex)) {
      m.pieces.push_back(std::move(p));
      m.origin.push_back(t);
    }
  }
  return m;
}

ViewMatrix expand(const ViewMatrix& view, const SubtokenMap& map) {
  const std::size_t n = map.pieces.size();
  ViewMatrix out(view.view(), n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q)
      if (view.at(map.origin[p], map.origin[q])) out.connect(p, q);
  return out;
}

ViewMatrix truncate(const ViewMatrix& view, std::size_t n) {
  if (n >= view.n()) return view;
  ViewMatrix out(view.view(), n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (view.at(i, j)) out.connect(i, j);
  return out;
}

}  // namespace sit::codegraph
