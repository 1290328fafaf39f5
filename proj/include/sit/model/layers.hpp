#pragma once

#include <functional>
#include <random>
#include <string>

#include "sit/model/config.hpp"
#include "sit/model/mask.hpp"
#include "sit/numkit/ops.hpp"
#include "sit/numkit/params.hpp"

namespace sit::model {

using numkit::Tensor;

// Receives each attention probability matrix as it is computed.
template <typename T>
using AttentionObserver =
    std::function<void(const std::string& where, int head, const Tensor<T>& probs,
                       const numkit::Mask* mask)>;

template <typename T>
struct ForwardContext {
  bool train = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
  const AttentionObserver<T>* observer = nullptr;

  Tensor<T> drop(const Tensor<T>& x) const {
    return train && dropout > 0.0 ? numkit::dropout(x, dropout, *rng) : x;
  }
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  static Linear create(numkit::ParamStore<T>& ps, const std::string& name, int in, int out,
                       std::mt19937_64& rng);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  static LayerNorm create(numkit::ParamStore<T>& ps, const std::string& name, int dim);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

// Multi-head scaled dot-product attention with optional Shaw-style relative
// key positions (one (2k+1) x d_k table shared by the heads).
template <typename T>
struct MultiHeadAttention {
  Linear<T> q, k, v, o;
  Tensor<T> relative;  // undefined when rpe_clip == 0
  int heads = 1;
  int clip = 0;
  std::string name;

  static MultiHeadAttention create(numkit::ParamStore<T>& ps, const std::string& name,
                                   const SitConfig& cfg, bool with_rpe, std::mt19937_64& rng);

  // `mask` restricts which keys each query may attend to; `weights`, when
  // given, multiplies the scaled logits elementwise before masking.
  Tensor<T> operator()(const Tensor<T>& query_in, const Tensor<T>& kv_in, const numkit::Mask* mask,
                       const Tensor<T>* weights, const ForwardContext<T>& ctx) const;
};

template <typename T>
struct FeedForward {
  Linear<T> in, out;

  static FeedForward create(numkit::ParamStore<T>& ps, const std::string& name, const SitConfig& cfg,
                            std::mt19937_64& rng);
  Tensor<T> operator()(const Tensor<T>& x, const ForwardContext<T>& ctx) const;
};

// Pre-norm transformer encoder layer: x + Attn(LN(x)), then + FFN(LN(.)).
template <typename T>
struct EncoderLayer {
  LayerNorm<T> ln_attn, ln_ff;
  MultiHeadAttention<T> attn;
  FeedForward<T> ff;

  static EncoderLayer create(numkit::ParamStore<T>& ps, const std::string& name, const SitConfig& cfg,
                             std::mt19937_64& rng);
  Tensor<T> operator()(const Tensor<T>& x, const numkit::Mask* mask, const Tensor<T>* weights,
                       const ForwardContext<T>& ctx) const;
};

// Pre-norm decoder layer: causal self-attention, cross-attention over the
// encoder memory, feed-forward.
template <typename T>
struct DecoderLayer {
  LayerNorm<T> ln_self, ln_cross, ln_ff;
  MultiHeadAttention<T> self_attn, cross_attn;
  FeedForward<T> ff;

  static DecoderLayer create(numkit::ParamStore<T>& ps, const std::string& name, const SitConfig& cfg,
                             std::mt19937_64& rng);
  Tensor<T> operator()(const Tensor<T>& y, const Tensor<T>& memory, const numkit::Mask& causal,
                       const ForwardContext<T>& ctx) const;
};

}  // namespace sit::model
