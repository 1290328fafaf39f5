#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sit/codegraph/graph.hpp"
#include "sit/model/config.hpp"
#include "sit/model/layers.hpp"
#include "sit/model/mask.hpp"

namespace sit::model {

// Plain multi-head self-attention over x (complete attention graph).
template <typename T>
Tensor<T> san(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const ForwardContext<T>& ctx = {});

// Structure-induced self-attention: attention restricted to mask.allowed.
// In multiplicative mode the scaled logits are first multiplied by the
// combined view weights.
template <typename T>
Tensor<T> si_san(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const AttentionMask& mask,
                 AttentionMode mode, const ForwardContext<T>& ctx = {});

// H = san_layer(x), H' = si_layer(H), returns H + H' (or H alone when
// `drop_structured` is set).
template <typename T>
Tensor<T> si_module(const EncoderLayer<T>& san_layer, const EncoderLayer<T>& si_layer, const Tensor<T>& x,
                    const AttentionMask& mask, AttentionMode mode, const ForwardContext<T>& ctx = {},
                    bool drop_structured = false);

template <typename T>
class SitModel {
 public:
  SitModel(SitConfig cfg, std::uint64_t seed);

  const SitConfig& config() const { return cfg_; }
  numkit::ParamStore<T>& params() { return params_; }
  const numkit::ParamStore<T>& params() const { return params_; }
  std::size_t param_count() const { return params_.numel(); }
  std::size_t encoder_param_count() const;

  // Source ids start with <root>; graph.size() must equal src.size() or
  // GraphSizeMismatch is thrown. The graph is used by S layers according to
  // config().pattern.
  Tensor<T> encode(std::span<const int> src, const codegraph::MultiViewGraph& graph,
                   const ForwardContext<T>& ctx = {}) const;
  // Same with an explicit mask for the S layers; nullptr means no restriction.
  Tensor<T> encode_masked(std::span<const int> src, const AttentionMask* mask,
                          const ForwardContext<T>& ctx = {}) const;

  // Logits [prefix.size(), tgt_vocab] for the token following each prefix
  // position.
  Tensor<T> decode(const Tensor<T>& memory, std::span<const int> prefix,
                   const ForwardContext<T>& ctx = {}) const;
  // Next-token logits after `prefix` (which starts with <bos>). Throws
  // PrefixTooLong.
  std::vector<T> decode_step(const Tensor<T>& memory, std::span<const int> prefix) const;

  // Debug switch: skip the structure-induced branch of every module.
  void set_drop_structured(bool v) { drop_structured_ = v; }
  void set_observer(AttentionObserver<T> obs) { observer_ = std::move(obs); }
  const AttentionObserver<T>* observer() const { return observer_ ? &observer_ : nullptr; }

  // Context for a training forward pass (dropout on).
  ForwardContext<T> train_context() { return {true, cfg_.dropout, &rng_, observer()}; }
  ForwardContext<T> eval_context() const { return {false, 0.0, nullptr, observer()}; }

  const std::vector<EncoderLayer<T>>& encoder_layers() const { return encoder_; }

 private:
  ForwardContext<T> with_observer(ForwardContext<T> ctx) const {
    if (!ctx.observer) ctx.observer = observer();
    return ctx;
  }

  SitConfig cfg_;
  numkit::ParamStore<T> params_;
  std::mt19937_64 rng_;
  Tensor<T> src_embed_, tgt_embed_;
  std::vector<EncoderLayer<T>> encoder_;
  LayerNorm<T> encoder_norm_;
  std::vector<DecoderLayer<T>> decoder_;
  LayerNorm<T> decoder_norm_;
  Linear<T> generator_;
  bool drop_structured_ = false;
  AttentionObserver<T> observer_;
};

}  // namespace sit::model
