#include "sit/model/layers.hpp"

#include <cmath>
#include <vector>

namespace sit::model {

using numkit::Init;

template <typename T>
Linear<T> Linear<T>::create(numkit::ParamStore<T>& ps, const std::string& name, int in, int out,
                            std::mt19937_64& rng) {
  const auto i = static_cast<std::size_t>(in);
  const auto o = static_cast<std::size_t>(out);
  return {ps.create(name + ".weight", {i, o}, Init::kUniformFanIn, rng),
          ps.create(name + ".bias", {o}, Init::kZeros, rng)};
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  return numkit::add(numkit::matmul(x, weight), bias);
}

template <typename T>
LayerNorm<T> LayerNorm<T>::create(numkit::ParamStore<T>& ps, const std::string& name, int dim) {
  std::mt19937_64 unused;
  const auto d = static_cast<std::size_t>(dim);
  return {ps.create(name + ".gain", {d}, Init::kOnes, unused),
          ps.create(name + ".bias", {d}, Init::kZeros, unused)};
}

template <typename T>
Tensor<T> LayerNorm<T>::operator()(const Tensor<T>& x) const {
  return numkit::layer_norm(x, gain, bias);
}

template <typename T>
MultiHeadAttention<T> MultiHeadAttention<T>::create(numkit::ParamStore<T>& ps, const std::string& name,
                                                    const SitConfig& cfg, bool with_rpe,
                                                    std::mt19937_64& rng) {
  MultiHeadAttention m;
  m.q = Linear<T>::create(ps, name + ".q", cfg.d_model, cfg.d_model, rng);
  m.k = Linear<T>::create(ps, name + ".k", cfg.d_model, cfg.d_model, rng);
  m.v = Linear<T>::create(ps, name + ".v", cfg.d_model, cfg.d_model, rng);
  m.o = Linear<T>::create(ps, name + ".o", cfg.d_model, cfg.d_model, rng);
  m.heads = cfg.heads;
  m.name = name;
  if (with_rpe && cfg.rpe_clip > 0) {
    m.clip = cfg.rpe_clip;
    m.relative = ps.create(name + ".relative_keys",
                           {static_cast<std::size_t>(2 * cfg.rpe_clip + 1), static_cast<std::size_t>(cfg.d_k())},
                           Init::kNormal002, rng);
  }
  return m;
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::operator()(const Tensor<T>& query_in, const Tensor<T>& kv_in,
                                            const numkit::Mask* mask, const Tensor<T>* weights,
                                            const ForwardContext<T>& ctx) const {
  const Tensor<T> qa = q(query_in);
  const Tensor<T> ka = k(kv_in);
  const Tensor<T> va = v(kv_in);
  const std::size_t dk = qa.cols() / static_cast<std::size_t>(heads);
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dk));
  std::vector<Tensor<T>> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dk;
    const auto qh = numkit::slice_last_dim(qa, off, dk);
    const auto kh = numkit::slice_last_dim(ka, off, dk);
    const auto vh = numkit::slice_last_dim(va, off, dk);
    auto logits = numkit::matmul_bt(qh, kh);
    if (relative.defined()) logits = numkit::add(logits, numkit::relative_logits(qh, relative, clip));
    logits = numkit::scale(logits, inv_sqrt);
    if (weights) logits = numkit::mul(logits, *weights);
    const auto probs = numkit::softmax_rows(logits, mask);
    if (ctx.observer && *ctx.observer) (*ctx.observer)(name, h, probs, mask);
    outs.push_back(numkit::matmul(probs, vh));
  }
  return o(numkit::concat_last_dim<T>(outs));
}

template <typename T>
FeedForward<T> FeedForward<T>::create(numkit::ParamStore<T>& ps, const std::string& name,
                                      const SitConfig& cfg, std::mt19937_64& rng) {
  return {Linear<T>::create(ps, name + ".in", cfg.d_model, cfg.d_ff, rng),
          Linear<T>::create(ps, name + ".out", cfg.d_ff, cfg.d_model, rng)};
}

template <typename T>
Tensor<T> FeedForward<T>::operator()(const Tensor<T>& x, const ForwardContext<T>& ctx) const {
  return out(ctx.drop(numkit::relu(in(x))));
}

template <typename T>
EncoderLayer<T> EncoderLayer<T>::create(numkit::ParamStore<T>& ps, const std::string& name,
                                        const SitConfig& cfg, std::mt19937_64& rng) {
  EncoderLayer l;
  l.ln_attn = LayerNorm<T>::create(ps, name + ".ln_attn", cfg.d_model);
  l.attn = MultiHeadAttention<T>::create(ps, name + ".attn", cfg, true, rng);
  l.ln_ff = LayerNorm<T>::create(ps, name + ".ln_ff", cfg.d_model);
  l.ff = FeedForward<T>::create(ps, name + ".ff", cfg, rng);
  return l;
}

template <typename T>
Tensor<T> EncoderLayer<T>::operator()(const Tensor<T>& x, const numkit::Mask* mask, const Tensor<T>* weights,
                                      const ForwardContext<T>& ctx) const {
  const auto normed = ln_attn(x);
  const auto a = numkit::add(x, ctx.drop(attn(normed, normed, mask, weights, ctx)));
  return numkit::add(a, ctx.drop(ff(ln_ff(a), ctx)));
}

template <typename T>
DecoderLayer<T> DecoderLayer<T>::create(numkit::ParamStore<T>& ps, const std::string& name,
                                        const SitConfig& cfg, std::mt19937_64& rng) {
  DecoderLayer l;
  l.ln_self = LayerNorm<T>::create(ps, name + ".ln_self", cfg.d_model);
  l.self_attn = MultiHeadAttention<T>::create(ps, name + ".self_attn", cfg, true, rng);
  l.ln_cross = LayerNorm<T>::create(ps, name + ".ln_cross", cfg.d_model);
  l.cross_attn = MultiHeadAttention<T>::create(ps, name + ".cross_attn", cfg, false, rng);
  l.ln_ff = LayerNorm<T>::create(ps, name + ".ln_ff", cfg.d_model);
  l.ff = FeedForward<T>::create(ps, name + ".ff", cfg, rng);
  return l;
}

template <typename T>
Tensor<T> DecoderLayer<T>::operator()(const Tensor<T>& y, const Tensor<T>& memory, const numkit::Mask& causal,
                                      const ForwardContext<T>& ctx) const {
  const auto n1 = ln_self(y);
  auto h = numkit::add(y, ctx.drop(self_attn(n1, n1, &causal, nullptr, ctx)));
  h = numkit::add(h, ctx.drop(cross_attn(ln_cross(h), memory, nullptr, nullptr, ctx)));
  return numkit::add(h, ctx.drop(ff(ln_ff(h), ctx)));
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;
template struct EncoderLayer<float>;
template struct EncoderLayer<double>;
template struct DecoderLayer<float>;
template struct DecoderLayer<double>;

}  // namespace sit::model
