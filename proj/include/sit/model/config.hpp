#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace sit::model {

// Reserved ids shared by the source and target vocabularies.
namespace special {
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kRoot = 2;
inline constexpr int kBos = 3;
inline constexpr int kEos = 4;
inline constexpr int kCount = 5;
}  // namespace special

enum class AttentionMode {
  kMasked,          // forbidden pairs get exactly zero weight
  kMultiplicative,  // logits scaled by the combined view weights, then masked
};

struct Pattern {
  enum class Kind { kStructured, kFull, kWindow, kRandom };
  Kind kind = Kind::kStructured;
  int window = 0;         // w, for kWindow
  int partners = 0;       // r, for kRandom
  std::uint64_t seed = 0; // for kRandom

  static Pattern structured() { return {}; }
  static Pattern full() { return {Kind::kFull}; }
  static Pattern window_of(int w) { return {Kind::kWindow, w}; }
  static Pattern random_of(int r, std::uint64_t seed) { return {Kind::kRandom, 0, r, seed}; }

  bool operator==(const Pattern&) const = default;
};

// "structured", "full", "window(w)", "random(r,seed)"
std::string to_string(const Pattern& p);
Pattern parse_pattern(const std::string& s);

struct SitConfig {
  int d_model = 128;
  int heads = 4;
  int d_ff = 512;
  int encoder_layers = 4;
  int decoder_layers = 4;
  int max_src_len = 400;
  int max_tgt_len = 32;
  double dropout = 0.1;
  int rpe_clip = 16;  // 0 disables relative positions
  AttentionMode attention_mode = AttentionMode::kMasked;
  Pattern pattern;
  // One letter per encoder layer: G = plain self-attention, S = structure-
  // induced self-attention.
  std::string layer_pattern = "GSGS";
  // Sum the outputs of each adjacent "GS" pair (structure-induced module).
  // Off gives a plain stack with some S layers.
  bool aggregate_modules = true;
  bool share_encoder_params = false;
  int src_vocab = 0;
  int tgt_vocab = 0;

  int d_k() const { return heads > 0 ? d_model / heads : 0; }
  int n_modules() const { return encoder_layers / 2; }

  // Every violated constraint, empty when valid.
  std::vector<std::string> violations() const;
  // Throws ConfigError listing all violations.
  void validate() const;

  bool operator==(const SitConfig&) const = default;
};

// Default layer pattern for the structure-induced encoder: "GS" repeated.
std::string module_pattern(int encoder_layers);

void to_json(nlohmann::json& j, const SitConfig& c);
// Missing keys keep their defaults; unknown keys are ignored.
void from_json(const nlohmann::json& j, SitConfig& c);

}  // namespace sit::model
