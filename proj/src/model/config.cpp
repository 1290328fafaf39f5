#include "sit/model/config.hpp"

#include <regex>

#include "sit/error.hpp"

namespace sit::model {

std::string to_string(const Pattern& p) {
  switch (p.kind) {
    case Pattern::Kind::kStructured: return "structured";
    case Pattern::Kind::kFull: return "full";
    case Pattern::Kind::kWindow: return "window(" + std::to_string(p.window) + ")";
    case Pattern::Kind::kRandom:
      return "random(" + std::to_string(p.partners) + "," + std::to_string(p.seed) + ")";
  }
  return "?";
}

Pattern parse_pattern(const std::string& s) {
  if (s == "structured") return Pattern::structured();
  if (s == "full") return Pattern::full();
  static const std::regex window(R"(window\((\d+)\))");
  static const std::regex random(R"(random\((\d+)(?:,\s*(\d+))?\))");
  std::smatch m;
  if (std::regex_match(s, m, window)) return Pattern::window_of(std::stoi(m[1]));
  if (std::regex_match(s, m, random))
    return Pattern::random_of(std::stoi(m[1]), m[2].matched ? std::stoull(m[2]) : 0);
  throw ConfigError({"unknown attention pattern \"" + s + "\""});
}

std::string module_pattern(int encoder_layers) {
  std::string p;
  for (int i = 0; i < encoder_layers; ++i) p += (i % 2 == 0) ? 'G' : 'S';
  return p;
}

std::vector<std::string> SitConfig::violations() const {
  std::vector<std::string> v;
  auto positive = [&](const char* name, int x) {
    if (x <= 0) v.push_back(std::string(name) + " must be positive, got " + std::to_string(x));
  };
  positive("d_model", d_model);
  positive("heads", heads);
  positive("d_ff", d_ff);
  positive("encoder_layers", encoder_layers);
  positive("decoder_layers", decoder_layers);
  positive("max_src_len", max_src_len);
  positive("max_tgt_len", max_tgt_len);
  if (heads > 0 && d_model % heads != 0)
    v.push_back("d_model (" + std::to_string(d_model) + ") must be divisible by heads (" +
                std::to_string(heads) + ")");
  if (encoder_layers % 2 != 0) v.push_back("encoder_layers must be even");
  if (static_cast<int>(layer_pattern.size()) != encoder_layers)
    v.push_back("layer_pattern \"" + layer_pattern + "\" must have encoder_layers (" +
                std::to_string(encoder_layers) + ") letters");
  if (layer_pattern.find_first_not_of("GS") != std::string::npos)
    v.push_back("layer_pattern may only contain G and S");
  if (dropout < 0.0 || dropout >= 1.0) v.push_back("dropout must be in [0, 1)");
  if (rpe_clip < 0) v.push_back("rpe_clip must be non-negative");
  if (pattern.window < 0 || pattern.partners < 0) v.push_back("pattern w and r must be non-negative");
  if (src_vocab < 0 || tgt_vocab < 0) v.push_back("vocabulary sizes must be non-negative");
  return v;
}

void SitConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

void to_json(nlohmann::json& j, const SitConfig& c) {
  j = nlohmann::json{
      {"d_model", c.d_model},
      {"heads", c.heads},
      {"d_ff", c.d_ff},
      {"encoder_layers", c.encoder_layers},
      {"decoder_layers", c.decoder_layers},
      {"max_src_len", c.max_src_len},
      {"max_tgt_len", c.max_tgt_len},
      {"dropout", c.dropout},
      {"rpe_clip", c.rpe_clip},
      {"attention_mode", c.attention_mode == AttentionMode::kMasked ? "masked" : "multiplicative"},
      {"pattern", to_string(c.pattern)},
      {"layer_pattern", c.layer_pattern},
      {"aggregate_modules", c.aggregate_modules},
      {"share_encoder_params", c.share_encoder_params},
      {"src_vocab", c.src_vocab},
      {"tgt_vocab", c.tgt_vocab},
  };
}

void from_json(const nlohmann::json& j, SitConfig& c) {
  std::vector<std::string> errors;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      errors.push_back(std::string("field \"") + key + "\" has the wrong type");
    }
  };
  get("d_model", c.d_model);
  get("heads", c.heads);
  get("d_ff", c.d_ff);
  get("encoder_layers", c.encoder_layers);
  get("decoder_layers", c.decoder_layers);
  get("max_src_len", c.max_src_len);
  get("max_tgt_len", c.max_tgt_len);
  get("dropout", c.dropout);
  get("rpe_clip", c.rpe_clip);
  get("layer_pattern", c.layer_pattern);
  get("aggregate_modules", c.aggregate_modules);
  get("share_encoder_params", c.share_encoder_params);
  get("src_vocab", c.src_vocab);
  get("tgt_vocab", c.tgt_vocab);
  std::string mode, pattern;
  get("attention_mode", mode);
  get("pattern", pattern);
  if (mode == "masked") c.attention_mode = AttentionMode::kMasked;
  else if (mode == "multiplicative") c.attention_mode = AttentionMode::kMultiplicative;
  else if (!mode.empty()) errors.push_back("attention_mode must be masked or multiplicative");
  if (!pattern.empty()) {
    try {
      c.pattern = parse_pattern(pattern);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.violations.begin(), e.violations.end());
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

}  // namespace sit::model
