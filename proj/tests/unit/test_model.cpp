#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "sit/codegraph/builder.hpp"
#include "sit/error.hpp"
#include "sit/model/search.hpp"
#include "sit/numkit/finite_diff.hpp"
#include "sit/trainer/corpus.hpp"

using namespace sit;
using namespace sit::model;
using numkit::Tensor;
using T64 = Tensor<double>;

namespace {

SitConfig tiny(int d = 8, int heads = 2, int enc = 2, int dec = 1) {
  SitConfig c;
  c.d_model = d;
  c.heads = heads;
  c.d_ff = 2 * d;
  c.encoder_layers = enc;
  c.decoder_layers = dec;
  c.layer_pattern = module_pattern(enc);
  c.max_src_len = 64;
  c.max_tgt_len = 8;
  c.dropout = 0.0;
  c.rpe_clip = 3;
  c.src_vocab = 20;
  c.tgt_vocab = 12;
  return c;
}

T64 random_input(std::size_t l, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(l * d);
  for (auto& x : v) x = nd(rng);
  return T64::from({l, d}, std::move(v));
}

std::vector<double> vec(const T64& t) { return {t.data().begin(), t.data().end()}; }

AttentionMask random_mask(std::size_t l, std::mt19937_64& rng) {
  AttentionMask m{numkit::Mask::all(l, l), std::nullopt};
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = i + 1; j < l; ++j) {
      const std::uint8_t a = rng() % 3 == 0;
      m.allowed.allowed[i * l + j] = m.allowed.allowed[j * l + i] = a;
    }
  return m;
}

std::vector<int> random_ids(std::size_t l, int vocab, std::mt19937_64& rng) {
  std::vector<int> ids{special::kRoot};
  for (std::size_t i = 1; i < l; ++i) ids.push_back(special::kCount + static_cast<int>(rng() % (vocab - special::kCount)));
  return ids;
}

codegraph::MultiViewGraph random_graph(std::size_t tokens, std::mt19937_64& rng) {
  using codegraph::View;
  using codegraph::ViewMatrix;
  ViewMatrix a(View::kAst, tokens), f(View::kFlow, tokens), d(View::kDep, tokens);
  for (std::size_t i = 0; i < tokens; ++i)
    for (std::size_t j = i + 1; j < tokens; ++j) {
      if (rng() % 4 == 0) a.connect(i, j);
      if (rng() % 5 == 0) f.connect(i, j);
      if (rng() % 7 == 0) d.connect(i, j);
    }
  auto g = codegraph::combine(a, f, d);
  g.tokens.assign(tokens, "t");
  return g;
}

}  // namespace

TEST_CASE("config validation lists every violation") {
  SitConfig c;
  c.d_model = 30;
  c.heads = 4;
  c.encoder_layers = 3;
  c.layer_pattern = "GSX";
  c.dropout = 1.5;
  const auto v = c.violations();
  CHECK(v.size() >= 4);
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations == v);
  }
  CHECK(SitConfig{}.violations().empty());
  CHECK(SitConfig{}.layer_pattern == "GSGS");
}

TEST_CASE("config json round trip") {
  SitConfig c = tiny();
  c.pattern = Pattern::random_of(5, 77);
  c.attention_mode = AttentionMode::kMultiplicative;
  c.share_encoder_params = true;
  nlohmann::json j = c;
  SitConfig back;
  j.get_to(back);
  CHECK(back == c);
  nlohmann::json bad = {{"d_model", "wide"}, {"pattern", "zigzag"}, {"attention_mode", "soft"}};
  try {
    SitConfig x;
    bad.get_to(x);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations.size() == 3);
  }
}

TEST_CASE("pattern parsing") {
  CHECK(parse_pattern("structured") == Pattern::structured());
  CHECK(parse_pattern("full") == Pattern::full());
  CHECK(parse_pattern("window(64)") == Pattern::window_of(64));
  CHECK(parse_pattern("random(3,9)") == Pattern::random_of(3, 9));
  for (const auto& p : {Pattern::window_of(2), Pattern::random_of(4, 1), Pattern::full()})
    CHECK(parse_pattern(to_string(p)) == p);
  CHECK_THROWS_AS(parse_pattern("window(-1)"), ConfigError);
  CHECK_THROWS_AS(parse_pattern("band"), ConfigError);
}

TEST_CASE("window and random patterns") {
  const auto w = pattern_mask(Pattern::window_of(2), 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(w.allowed.at(i, j) == (std::max(i, j) - std::min(i, j) <= 2));
  const auto r0 = pattern_mask(Pattern::random_of(0, 1), 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(r0.allowed.at(i, j) == (i == j));
  const auto r = pattern_mask(Pattern::random_of(3, 5), 20);
  CHECK(r.allowed.allowed == pattern_mask(Pattern::random_of(3, 5), 20).allowed.allowed);
  CHECK(r.allowed.allowed != pattern_mask(Pattern::random_of(3, 6), 20).allowed.allowed);
  for (std::size_t i = 0; i < 20; ++i) {
    std::size_t deg = 0;
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK(r.allowed.at(i, j) == r.allowed.at(j, i));
      deg += j != i && r.allowed.at(i, j);
    }
    CHECK(r.allowed.at(i, i));
    CHECK(deg >= 3);
  }
  const auto full = pattern_mask(Pattern::full(), 4);
  CHECK(std::all_of(full.allowed.allowed.begin(), full.allowed.allowed.end(), [](auto v) { return v == 1; }));
}

TEST_CASE("structure mask follows the combined matrix") {
  std::mt19937_64 rng(2);
  const auto g = random_graph(9, rng);
  const auto m = structure_mask(g);
  REQUIRE(m.n() == 10);
  REQUIRE(m.weights);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(m.allowed.at(i, j) == (g.at(i, j) > 0));
      CHECK((*m.weights)[i * 10 + j] == g.at(i, j));
    }
  const auto cm = causal_mask(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(cm.at(i, j) == (j <= i));
}

TEST_CASE("attention degenerate cases") {
  std::mt19937_64 rng(3);
  numkit::ParamStore<double> ps;
  const auto cfg = tiny();
  const auto attn = MultiHeadAttention<double>::create(ps, "a", cfg, true, rng);
  // l = 1: weight 1 on self, so the output is the projected value.
  const auto x1 = random_input(1, 8, rng);
  CHECK(vec(san(attn, x1)) == vec(attn.o(attn.v(x1))));
  // Self-loop-only mask: same per token.
  const auto x = random_input(5, 8, rng);
  AttentionMask self{numkit::Mask{5, 5, std::vector<std::uint8_t>(25, 0)}, std::nullopt};
  for (std::size_t i = 0; i < 5; ++i) self.allowed.allowed[i * 6] = 1;
  const auto out = vec(si_san(attn, x, self, AttentionMode::kMasked));
  const auto expect = vec(attn.o(attn.v(x)));
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  // All-allowed mask reduces to plain self-attention exactly.
  AttentionMask all{numkit::Mask::all(5, 5), std::nullopt};
  CHECK(vec(si_san(attn, x, all, AttentionMode::kMasked)) == vec(san(attn, x)));
  CHECK_THROWS_AS(si_san(attn, random_input(4, 8, rng), self, AttentionMode::kMasked), GraphSizeMismatch);
}

TEST_CASE("unmasked attention without relative positions is permutation equivariant") {
  std::mt19937_64 rng(4);
  numkit::ParamStore<double> ps;
  auto cfg = tiny();
  cfg.rpe_clip = 0;
  const auto layer = EncoderLayer<double>::create(ps, "e", cfg, rng);
  const std::size_t l = 6;
  const auto x = random_input(l, 8, rng);
  std::vector<std::size_t> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> px(l * 8);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t k = 0; k < 8; ++k) px[i * 8 + k] = x.data()[perm[i] * 8 + k];
  const auto xp = T64::from({l, 8}, px);
  // Mask conjugated by the same permutation.
  const auto m = random_mask(l, rng);
  numkit::Mask pm{l, l, std::vector<std::uint8_t>(l * l)};
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j) pm.allowed[i * l + j] = m.allowed.at(perm[i], perm[j]);
  for (const bool masked : {false, true}) {
    const auto y = vec(layer(x, masked ? &m.allowed : nullptr, nullptr, {}));
    const auto yp = vec(layer(xp, masked ? &pm : nullptr, nullptr, {}));
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t k = 0; k < 8; ++k) CHECK(yp[i * 8 + k] == doctest::Approx(y[perm[i] * 8 + k]).epsilon(1e-10));
  }
}

TEST_CASE("masked attention never leaks onto forbidden pairs") {
  std::mt19937_64 rng(5);
  auto cfg = tiny(8, 2, 4, 1);
  SitModel<double> m(cfg, 1);
  std::size_t checked = 0;
  m.set_observer([&](const std::string& where, int, const T64& p, const numkit::Mask* mask) {
    if (!mask || where.find("decoder") != std::string::npos) return;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0;
      for (std::size_t j = 0; j < p.cols(); ++j) {
        if (!mask->at(i, j)) CHECK(p.data()[i * p.cols() + j] == 0.0);
        s += p.data()[i * p.cols() + j];
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    ++checked;
  });
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t tokens = 3 + rng() % 10;
    const auto g = random_graph(tokens, rng);
    m.encode(random_ids(tokens + 1, cfg.src_vocab, rng), g);
  }
  CHECK(checked == 5 * 2 * 2);  // two S layers, two heads
}

TEST_CASE("multiplicative mode scales logits by the view weights") {
  std::mt19937_64 rng(6);
  numkit::ParamStore<double> ps;
  const auto cfg = tiny();
  const auto attn = MultiHeadAttention<double>::create(ps, "a", cfg, false, rng);
  const auto x = random_input(4, 8, rng);
  AttentionMask ones{numkit::Mask::all(4, 4), std::vector<double>(16, 1.0)};
  // Unit weights change nothing.
  CHECK(vec(si_san(attn, x, ones, AttentionMode::kMultiplicative)) == vec(san(attn, x)));
  AttentionMask twos = ones;
  twos.weights->assign(16, 2.0);
  twos.allowed.allowed[1] = twos.allowed.allowed[4] = 0;
  std::size_t seen = 0;
  ForwardContext<double> ctx;
  AttentionObserver<double> obs = [&](const std::string&, int, const T64& p, const numkit::Mask*) {
    CHECK(p.data()[1] == 0.0);
    CHECK(p.data()[4] == 0.0);
    ++seen;
  };
  ctx.observer = &obs;
  const auto y = si_san(attn, x, twos, AttentionMode::kMultiplicative, ctx);
  CHECK(seen == 2);
  CHECK(vec(y) != vec(si_san(attn, x, twos, AttentionMode::kMasked)));
}

TEST_CASE("structure-induced module") {
  std::mt19937_64 rng(7);
  numkit::ParamStore<double> ps;
  const auto cfg = tiny();
  const auto a = EncoderLayer<double>::create(ps, "a", cfg, rng);
  const auto b = EncoderLayer<double>::create(ps, "b", cfg, rng);
  const auto x = random_input(6, 8, rng);
  const auto m = random_mask(6, rng);
  const auto out = si_module(a, b, x, m, AttentionMode::kMasked);
  CHECK(out.shape() == x.shape());
  // Dropping H' leaves the SAN sublayer output.
  CHECK(vec(si_module(a, b, x, m, AttentionMode::kMasked, {}, true)) == vec(a(x, nullptr, nullptr, {})));
  // Full mask with tied sublayers: H + SAN(H).
  AttentionMask all{numkit::Mask::all(6, 6), std::nullopt};
  const auto h = a(x, nullptr, nullptr, {});
  CHECK(vec(si_module(a, a, x, all, AttentionMode::kMasked)) == vec(numkit::add(h, a(h, nullptr, nullptr, {}))));
}

TEST_CASE("parameter parity") {
  auto cfg = tiny(16, 4, 4, 2);
  SitModel<float> sit(cfg, 0);
  auto vanilla_cfg = cfg;
  vanilla_cfg.pattern = Pattern::full();
  vanilla_cfg.layer_pattern = "GGGG";
  vanilla_cfg.aggregate_modules = false;
  SitModel<float> vanilla(vanilla_cfg, 0);
  CHECK(sit.param_count() == vanilla.param_count());
  auto shared_cfg = cfg;
  shared_cfg.share_encoder_params = true;
  SitModel<float> shared(shared_cfg, 0);
  CHECK(shared.encoder_param_count() * 4 == sit.encoder_param_count());
  CHECK(shared.param_count() == sit.param_count() - 3 * shared.encoder_param_count());
}

TEST_CASE("encoder ignores the graph without S layers") {
  std::mt19937_64 rng(8);
  auto cfg = tiny(8, 2, 4, 1);
  cfg.layer_pattern = "GGGG";
  SitModel<double> m(cfg, 3);
  const auto ids = random_ids(8, cfg.src_vocab, rng);
  const auto g1 = random_graph(7, rng), g2 = random_graph(7, rng);
  CHECK(vec(m.encode(ids, g1)) == vec(m.encode(ids, g2)));
  CHECK_THROWS_AS(m.encode(ids, random_graph(4, rng)), GraphSizeMismatch);
}

TEST_CASE("shared encoder layers reference one parameter set") {
  auto cfg = tiny(8, 2, 4, 1);
  cfg.share_encoder_params = true;
  SitModel<double> m(cfg, 3);
  const auto& layers = m.encoder_layers();
  for (const auto& l : layers) CHECK(l.attn.q.weight.node() == layers[0].attn.q.weight.node());
}

TEST_CASE("decoder is causal and sized by the vocabulary") {
  std::mt19937_64 rng(9);
  const auto cfg = tiny();
  SitModel<double> m(cfg, 4);
  const auto ids = random_ids(6, cfg.src_vocab, rng);
  const auto memory = m.encode(ids, random_graph(5, rng));
  std::vector<int> prefix = {special::kBos, 7, 8, 9};
  const auto logits = m.decode(memory, prefix);
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == static_cast<std::size_t>(cfg.tgt_vocab));
  auto altered = prefix;
  altered[3] = 10;
  altered[2] = 5;
  const auto other = m.decode(memory, altered);
  for (std::size_t k = 0; k < logits.cols() * 2; ++k) CHECK(logits.data()[k] == other.data()[k]);
  CHECK(m.decode_step(memory, prefix).size() == static_cast<std::size_t>(cfg.tgt_vocab));
  std::vector<int> too_long(static_cast<std::size_t>(cfg.max_tgt_len) + 1, 6);
  CHECK_THROWS_AS(m.decode_step(memory, too_long), PrefixTooLong);
}

TEST_CASE("beam of one equals greedy and search is deterministic") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto cfg = tiny();
    cfg.max_tgt_len = 6;
    SitModel<double> m(cfg, static_cast<std::uint64_t>(trial));
    const auto memory = m.encode(random_ids(5, cfg.src_vocab, rng), random_graph(4, rng));
    CHECK(beam_decode(m, memory, 1) == greedy_decode(m, memory));
    const auto h = beam_search(m, memory, 3);
    CHECK(h.token_ids == beam_search(m, memory, 3).token_ids);
    CHECK(h.log_prob <= 0.0);
    // The reported log-probability is the teacher-forced one.
    std::vector<int> prefix{special::kBos};
    double lp = 0;
    for (int t : h.token_ids) {
      const auto logits = m.decode_step(memory, prefix);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0;
      for (double v : logits) z += std::exp(v - mx);
      lp += logits[static_cast<std::size_t>(t)] - mx - std::log(z);
      prefix.push_back(t);
    }
    CHECK(h.log_prob == doctest::Approx(lp).epsilon(1e-9));
    CHECK(h.finished == (!h.token_ids.empty() && h.token_ids.back() == special::kEos));
  }
  Hypothesis h{{5, 6, 4}, -3.0, true};
  CHECK(h.normalized(0.6) == doctest::Approx(-3.0 / std::pow(3.0, 0.6)));
}

TEST_CASE("gradients through the model match finite differences") {
  std::mt19937_64 rng(11);
  auto cfg = tiny(4, 2, 2, 1);
  cfg.src_vocab = cfg.tgt_vocab = 8;
  SitModel<double> m(cfg, 5);
  const auto g = random_graph(4, rng);
  const std::vector<int> src = {special::kRoot, 5, 6, 7, 5};
  const std::vector<int> tgt = {special::kBos, 6, 7};
  const std::vector<int> gold = {6, 7, special::kEos};
  auto loss = [&] { return numkit::cross_entropy(m.decode(m.encode(src, g), tgt), gold); };
  m.params().zero_grad();
  numkit::backward(loss());
  for (const auto& p : m.params().params()) {
    auto t = p.tensor;
    const auto numeric = numkit::finite_diff_inplace<double>(
        [&] {
          numkit::NoGradGuard guard;
          return loss().item();
        },
        t, 1e-5);
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
    INFO(p.name);
    CHECK(numkit::max_relative_error(analytic, numeric) < 1e-4);
  }
}
