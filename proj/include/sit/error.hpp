#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sit {

// Base of every error raised by the library. `code()` is a stable
// machine-readable identifier used by the CLI's JSON error output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class LexError : public Error {
 public:
  LexError(int line, int col, char ch)
      : Error("LexError", "unexpected character '" + std::string(1, ch) +
                              "' at " + std::to_string(line) + ":" +
                              std::to_string(col)),
        line(line), col(col), ch(ch) {}
  int line;
  int col;
  char ch;
};

class ParseError : public Error {
 public:
  ParseError(std::string expected, std::string found, std::size_t position)
      : Error("ParseError", "expected " + expected + ", found " + found +
                                " at token " + std::to_string(position)),
        expected(std::move(expected)), found(std::move(found)),
        position(position) {}
  std::string expected;
  std::string found;
  std::size_t position;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

class NegativeWeight : public Error {
 public:
  explicit NegativeWeight(const std::string& what)
      : Error("NegativeWeight", what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("ShapeError", what) {}
};

class MaskAllForbidden : public Error {
 public:
  explicit MaskAllForbidden(std::size_t row)
      : Error("MaskAllForbidden",
              "mask row " + std::to_string(row) + " has no allowed position"),
        row(row) {}
  std::size_t row;
};

class NotScalar : public Error {
 public:
  explicit NotScalar(std::size_t numel)
      : Error("NotScalar", "backward requires a scalar loss, got " +
                               std::to_string(numel) + " elements") {}
};

class GraphSizeMismatch : public Error {
 public:
  GraphSizeMismatch(std::size_t tokens, std::size_t graph)
      : Error("GraphSizeMismatch",
              "sequence has " + std::to_string(tokens) +
                  " tokens but graph has " + std::to_string(graph)) {}
};

class PrefixTooLong : public Error {
 public:
  PrefixTooLong(std::size_t len, std::size_t max)
      : Error("PrefixTooLong", "decoder prefix length " + std::to_string(len) +
                                   " exceeds max_tgt_len " +
                                   std::to_string(max)) {}
};

class DivergedError : public Error {
 public:
  explicit DivergedError(const std::string& what)
      : Error("DivergedError", what) {}
};

class EmptyReference : public Error {
 public:
  explicit EmptyReference(const std::string& what)
      : Error("EmptyReference", what) {}
};

class VocabMismatch : public Error {
 public:
  explicit VocabMismatch(const std::string& what)
      : Error("VocabMismatch", what) {}
};

// Carries every violation found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error("ConfigError", join(violations)),
        violations(std::move(violations)) {}
  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
};

}  // namespace sit
