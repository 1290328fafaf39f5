#include "sit/model/model.hpp"

#include "sit/error.hpp"

namespace sit::model {

namespace {

template <typename T>
Tensor<T> weight_tensor(const AttentionMask& mask) {
  std::vector<T> w(mask.weights->begin(), mask.weights->end());
  return Tensor<T>::from({mask.n(), mask.n()}, std::move(w));
}

}  // namespace

template <typename T>
Tensor<T> san(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const ForwardContext<T>& ctx) {
  return attn(x, x, nullptr, nullptr, ctx);
}

template <typename T>
Tensor<T> si_san(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const AttentionMask& mask,
                 AttentionMode mode, const ForwardContext<T>& ctx) {
  if (mask.n() != x.rows()) throw GraphSizeMismatch(x.rows(), mask.n());
  if (mode == AttentionMode::kMultiplicative && mask.weights) {
    const auto w = weight_tensor<T>(mask);
    return attn(x, x, &mask.allowed, &w, ctx);
  }
  return attn(x, x, &mask.allowed, nullptr, ctx);
}

template <typename T>
Tensor<T> si_module(const EncoderLayer<T>& san_layer, const EncoderLayer<T>& si_layer, const Tensor<T>& x,
                    const AttentionMask& mask, AttentionMode mode, const ForwardContext<T>& ctx,
                    bool drop_structured) {
  if (mask.n() != x.rows()) throw GraphSizeMismatch(x.rows(), mask.n());
  const auto h = san_layer(x, nullptr, nullptr, ctx);
  if (drop_structured) return h;
  std::optional<Tensor<T>> w;
  if (mode == AttentionMode::kMultiplicative && mask.weights) w = weight_tensor<T>(mask);
  const auto h2 = si_layer(h, &mask.allowed, w ? &*w : nullptr, ctx);
  return numkit::add(h, h2);
}

template <typename T>
SitModel<T>::SitModel(SitConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
  if (cfg_.src_vocab <= special::kCount || cfg_.tgt_vocab <= special::kCount)
    throw ConfigError({"src_vocab and tgt_vocab must exceed the reserved tokens"});
  const auto d = static_cast<std::size_t>(cfg_.d_model);
  src_embed_ = params_.create("src_embed", {static_cast<std::size_t>(cfg_.src_vocab), d},
                              numkit::Init::kNormal002, rng_);
  tgt_embed_ = params_.create("tgt_embed", {static_cast<std::size_t>(cfg_.tgt_vocab), d},
                              numkit::Init::kNormal002, rng_);
  if (cfg_.share_encoder_params) {
    const auto shared = EncoderLayer<T>::create(params_, "encoder.shared", cfg_, rng_);
    encoder_.assign(static_cast<std::size_t>(cfg_.encoder_layers), shared);
  } else {
    for (int i = 0; i < cfg_.encoder_layers; ++i)
      encoder_.push_back(EncoderLayer<T>::create(params_, "encoder.layer" + std::to_string(i), cfg_, rng_));
  }
  encoder_norm_ = LayerNorm<T>::create(params_, "encoder.norm", cfg_.d_model);
  for (int i = 0; i < cfg_.decoder_layers; ++i)
    decoder_.push_back(DecoderLayer<T>::create(params_, "decoder.layer" + std::to_string(i), cfg_, rng_));
  decoder_norm_ = LayerNorm<T>::create(params_, "decoder.norm", cfg_.d_model);
  generator_ = Linear<T>::create(params_, "generator", cfg_.d_model, cfg_.tgt_vocab, rng_);
}

template <typename T>
std::size_t SitModel<T>::encoder_param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_.params())
    if (p.name.rfind("encoder.layer", 0) == 0 || p.name.rfind("encoder.shared", 0) == 0) n += p.tensor.numel();
  return n;
}

template <typename T>
Tensor<T> SitModel<T>::encode(std::span<const int> src, const codegraph::MultiViewGraph& graph,
                              const ForwardContext<T>& ctx) const {
  if (graph.size() != src.size()) throw GraphSizeMismatch(src.size(), graph.size());
  if (cfg_.pattern.kind == Pattern::Kind::kFull) return encode_masked(src, nullptr, ctx);
  const auto mask = encoder_mask(cfg_.pattern, graph);
  return encode_masked(src, &mask, ctx);
}

template <typename T>
Tensor<T> SitModel<T>::encode_masked(std::span<const int> src, const AttentionMask* mask,
                                     const ForwardContext<T>& given) const {
  const auto ctx = with_observer(given);
  if (mask && mask->n() != src.size()) throw GraphSizeMismatch(src.size(), mask->n());
  const numkit::Mask* allowed = mask ? &mask->allowed : nullptr;
  std::optional<Tensor<T>> weights;
  if (mask && cfg_.attention_mode == AttentionMode::kMultiplicative && mask->weights)
    weights = weight_tensor<T>(*mask);
  const Tensor<T>* w = weights ? &*weights : nullptr;

  auto x = ctx.drop(numkit::embedding_lookup(src, src_embed_));
  const auto& lp = cfg_.layer_pattern;
  std::size_t i = 0;
  while (i < encoder_.size()) {
    const bool module = cfg_.aggregate_modules && lp[i] == 'G' && i + 1 < encoder_.size() && lp[i + 1] == 'S';
    if (module) {
      const auto h = encoder_[i](x, nullptr, nullptr, ctx);
      x = drop_structured_ ? h : numkit::add(h, encoder_[i + 1](h, allowed, w, ctx));
      i += 2;
    } else {
      x = lp[i] == 'S' ? encoder_[i](x, allowed, w, ctx) : encoder_[i](x, nullptr, nullptr, ctx);
      ++i;
    }
  }
  return encoder_norm_(x);
}

template <typename T>
Tensor<T> SitModel<T>::decode(const Tensor<T>& memory, std::span<const int> prefix,
                              const ForwardContext<T>& given) const {
  const auto ctx = with_observer(given);
  if (prefix.size() > static_cast<std::size_t>(cfg_.max_tgt_len))
    throw PrefixTooLong(prefix.size(), static_cast<std::size_t>(cfg_.max_tgt_len));
  const auto causal = causal_mask(prefix.size());
  auto y = ctx.drop(numkit::embedding_lookup(prefix, tgt_embed_));
  for (const auto& layer : decoder_) y = layer(y, memory, causal, ctx);
  return generator_(decoder_norm_(y));
}

template <typename T>
std::vector<T> SitModel<T>::decode_step(const Tensor<T>& memory, std::span<const int> prefix) const {
  numkit::NoGradGuard guard;
  const auto logits = decode(memory, prefix, eval_context());
  const std::size_t v = logits.cols();
  const auto d = logits.data();
  return {d.end() - static_cast<std::ptrdiff_t>(v), d.end()};
}

template Tensor<float> san(const MultiHeadAttention<float>&, const Tensor<float>&, const ForwardContext<float>&);
template Tensor<double> san(const MultiHeadAttention<double>&, const Tensor<double>&, const ForwardContext<double>&);
template Tensor<float> si_san(const MultiHeadAttention<float>&, const Tensor<float>&, const AttentionMask&,
                              AttentionMode, const ForwardContext<float>&);
template Tensor<double> si_san(const MultiHeadAttention<double>&, const Tensor<double>&, const AttentionMask&,
                               AttentionMode, const ForwardContext<double>&);
template Tensor<float> si_module(const EncoderLayer<float>&, const EncoderLayer<float>&, const Tensor<float>&,
                                 const AttentionMask&, AttentionMode, const ForwardContext<float>&, bool);
template Tensor<double> si_module(const EncoderLayer<double>&, const EncoderLayer<double>&, const Tensor<double>&,
                                  const AttentionMask&, AttentionMode, const ForwardContext<double>&, bool);
template class SitModel<float>;
template class SitModel<double>;

}  // namespace sit::model
