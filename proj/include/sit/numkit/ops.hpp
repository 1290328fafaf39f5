#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sit/numkit/tensor.hpp"

namespace sit::numkit {

// Boolean attention mask; allowed[i * cols + j] != 0 marks a permitted pair.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  bool at(std::size_t i, std::size_t j) const { return allowed[i * cols + j] != 0; }
  static Mask all(std::size_t rows, std::size_t cols) {
    return {rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
  }
};

// Logit offset applied to forbidden positions before the softmax; the
// resulting probabilities are then set to exactly zero.
inline constexpr double kMaskedLogit = -1e9;

// All operations take rank-2 [rows, cols] tensors unless noted and throw
// ShapeError on incompatible shapes.

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// a * b^T
template <typename T> Tensor<T> matmul_bt(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose_last_two(const Tensor<T>& a);

// Same-shape sum, or `b` a row vector of length a.cols() broadcast over rows.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
// Same-shape product, or `b` a single element broadcast everywhere.
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> sum(const Tensor<T>& a);

// Row-wise softmax over the last dimension. With a mask, forbidden entries
// are exactly 0 and each row renormalizes over its allowed set. Throws
// MaskAllForbidden if some row allows nothing.
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& x, const Mask* mask = nullptr);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5));

// Inverted dropout; identity when p == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng);

template <typename T> Tensor<T> concat_last_dim(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> slice_last_dim(const Tensor<T>& x, std::size_t start, std::size_t len);

// Rows of `table` selected by `ids`.
template <typename T> Tensor<T> embedding_lookup(std::span<const int> ids, const Tensor<T>& table);

// Relative-position key scores: out[i][j] = q[i] . table[clip(j - i) + k],
// with distances clipped to [-k, k]. `table` has 2k+1 rows.
template <typename T>
Tensor<T> relative_logits(const Tensor<T>& q, const Tensor<T>& table, int clip);

enum class Reduction { kMean, kSum };

// Token-level cross-entropy of softmax(logits) against `targets`; targets
// equal to `ignore` are excluded. kMean divides by the counted tokens.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets,
                        Reduction reduction = Reduction::kMean, int ignore = -1);

}  // namespace sit::numkit
