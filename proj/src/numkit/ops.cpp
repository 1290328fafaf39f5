#include "sit/numkit/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace sit::numkit {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;

template <typename T>
MapC<T> view(std::span<const T> d, std::size_t r, std::size_t c) {
  return MapC<T>(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
template <typename T>
Map<T> view(std::span<T> d, std::size_t r, std::size_t c) {
  return Map<T>(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + " expects a matrix, got " + shape_str(a.shape()));
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

#ifndef NDEBUG
template <typename T>
void check_finite(const std::vector<T>& v, const char* op) {
  for (T x : v)
    if (!std::isfinite(x)) throw ShapeError(std::string(op) + " produced a non-finite value");
}
#endif

// Builds the op result, wiring the autograd record only when some input
// needs a gradient and recording is enabled.
template <typename T>
Tensor<T> result(const char* op, Shape shape, std::vector<T> data,
                 std::initializer_list<Tensor<T>> inputs,
                 std::function<void(detail::Node<T>&)> bw) {
#ifndef NDEBUG
  bool finite_in = true;
  for (const auto& in : inputs)
    for (T x : in.data()) finite_in = finite_in && std::isfinite(x);
  if (finite_in) check_finite(data, op);
#else
  (void)op;
#endif
  auto out = Tensor<T>::from(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto* n = out.node();
  n->requires_grad = true;
  for (const auto& in : inputs) n->parents.push_back(in.node_ptr());
  n->backward = std::move(bw);
  return out;
}

template <typename T>
detail::Node<T>& parent(detail::Node<T>& n, std::size_t i) {
  return *n.parents[i];
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul", a.shape(), b.shape());
  std::vector<T> out(m * n);
  view<T>(std::span<T>(out), m, n).noalias() = view(a.data(), m, k) * view(b.data(), k, n);
  return result<T>("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node<T>& self) {
    auto g = view<T>(std::span<const T>(self.grad), m, n);
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad)
      view(pa.grad_buffer(), m, k).noalias() += g * view<T>(std::span<const T>(pb.data), k, n).transpose();
    if (pb.requires_grad)
      view(pb.grad_buffer(), k, n).noalias() += view<T>(std::span<const T>(pa.data), m, k).transpose() * g;
  });
}

template <typename T>
Tensor<T> matmul_bt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_bt");
  require_matrix(b, "matmul_bt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) mismatch("matmul_bt", a.shape(), b.shape());
  std::vector<T> out(m * n);
  view<T>(std::span<T>(out), m, n).noalias() = view(a.data(), m, k) * view(b.data(), n, k).transpose();
  return result<T>("matmul_bt", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node<T>& self) {
    auto g = view<T>(std::span<const T>(self.grad), m, n);
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad)
      view(pa.grad_buffer(), m, k).noalias() += g * view<T>(std::span<const T>(pb.data), n, k);
    if (pb.requires_grad)
      view(pb.grad_buffer(), n, k).noalias() += g.transpose() * view<T>(std::span<const T>(pa.data), m, k);
  });
}

template <typename T>
Tensor<T> transpose_last_two(const Tensor<T>& a) {
  require_matrix(a, "transpose_last_two");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<T> out(r * c);
  view<T>(std::span<T>(out), c, r) = view(a.data(), r, c).transpose();
  return result<T>("transpose", {c, r}, std::move(out), {a}, [r, c](detail::Node<T>& self) {
    view(parent(self, 0).grad_buffer(), r, c) += view<T>(std::span<const T>(self.grad), c, r).transpose();
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool same = a.shape() == b.shape();
  const bool row = !same && b.numel() == a.cols() && (b.rank() == 1 || b.rows() == 1);
  if (!same && !row) mismatch("add", a.shape(), b.shape());
  std::vector<T> out(a.data().begin(), a.data().end());
  const std::size_t c = a.cols();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += same ? bd[i] : bd[i % c];
  return result<T>("add", a.shape(), std::move(out), {a, b}, [same, c](detail::Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[same ? i : i % c] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const bool same = a.shape() == b.shape();
  if (!same && b.numel() != 1) mismatch("mul", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * (same ? bd[i] : bd[0]);
  return result<T>("mul", a.shape(), std::move(out), {a, b}, [same](detail::Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (same ? pb.data[i] : pb.data[0]);
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[same ? i : 0] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (T& x : out) x *= s;
  return result<T>("scale", a.shape(), std::move(out), {a}, [s](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (T& x : out) x = x > T(0) ? x : T(0);
  return result<T>("relu", a.shape(), std::move(out), {a}, [](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (self.data[i] > T(0)) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T x : a.data()) s += x;
  return result<T>("sum", {1}, {s}, {a}, [](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (T& x : g) x += self.grad[0];
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, const Mask* mask) {
  const std::size_t r = x.numel() / x.cols(), c = x.cols();
  if (mask && (mask->rows != r || mask->cols != c))
    mismatch("softmax_rows mask", x.shape(), {mask->rows, mask->cols});
  std::vector<T> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < r; ++i) {
    T* row = out.data() + i * c;
    if (mask) {
      bool any = false;
      for (std::size_t j = 0; j < c; ++j) {
        if (mask->at(i, j)) any = true;
        else row[j] += static_cast<T>(kMaskedLogit);
      }
      if (!any) throw MaskAllForbidden(i);
    }
    T mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) row[j] /= z;
    if (mask)
      for (std::size_t j = 0; j < c; ++j)
        if (!mask->at(i, j)) row[j] = T(0);
  }
  return result<T>("softmax_rows", x.shape(), std::move(out), {x}, [r, c](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      const T* y = self.data.data() + i * c;
      const T* gy = self.grad.data() + i * c;
      T dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += y[j] * gy[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (gy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  const std::size_t c = x.cols(), r = x.numel() / c;
  if (gain.numel() != c || bias.numel() != c) mismatch("layer_norm", x.shape(), gain.shape());
  std::vector<T> out(x.numel());
  // Normalized values and inverse deviations are kept for the backward pass.
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv = std::make_shared<std::vector<T>>(r);
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  for (std::size_t i = 0; i < r; ++i) {
    T mean = 0;
    for (std::size_t j = 0; j < c; ++j) mean += xd[i * c + j];
    mean /= static_cast<T>(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) {
      const T d = xd[i * c + j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(c);
    const T s = T(1) / std::sqrt(var + eps);
    (*inv)[i] = s;
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (xd[i * c + j] - mean) * s;
      (*xhat)[i * c + j] = h;
      out[i * c + j] = h * gd[j] + bd[j];
    }
  }
  return result<T>("layer_norm", x.shape(), std::move(out), {x, gain, bias},
                   [r, c, xhat, inv](detail::Node<T>& self) {
    auto& px = parent(self, 0);
    auto& pg = parent(self, 1);
    auto& pb = parent(self, 2);
    const auto& gy = self.grad;
    if (pg.requires_grad) {
      auto g = pg.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += gy[i * c + j] * (*xhat)[i * c + j];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += gy[i * c + j];
    }
    if (px.requires_grad) {
      auto g = px.grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        T mean_d = 0, mean_dh = 0;
        for (std::size_t j = 0; j < c; ++j) {
          const T d = gy[i * c + j] * pg.data[j];
          mean_d += d;
          mean_dh += d * (*xhat)[i * c + j];
        }
        mean_d /= static_cast<T>(c);
        mean_dh /= static_cast<T>(c);
        for (std::size_t j = 0; j < c; ++j) {
          const T d = gy[i * c + j] * pg.data[j];
          g[i * c + j] += (*inv)[i] * (d - mean_d - (*xhat)[i * c + j] * mean_dh);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  auto keep = std::make_shared<std::vector<T>>(x.numel());
  std::bernoulli_distribution coin(1.0 - p);
  const T s = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> out(x.numel());
  auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*keep)[i] = coin(rng) ? s : T(0);
    out[i] = xd[i] * (*keep)[i];
  }
  return result<T>("dropout", x.shape(), std::move(out), {x}, [keep](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*keep)[i];
  });
}

template <typename T>
Tensor<T> concat_last_dim(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_last_dim of nothing");
  const std::size_t r = parts[0].numel() / parts[0].cols();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.numel() / p.cols() != r) mismatch("concat_last_dim", parts[0].shape(), p.shape());
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<T> out(r * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto d = parts[k].data();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(d.data() + i * widths[k], widths[k], out.data() + i * total + off);
    off += widths[k];
  }
  Shape shape = parts[0].shape();
  shape.back() = total;
  auto out_t = Tensor<T>::from(std::move(shape), std::move(out));
  if (!grad_enabled()) return out_t;
  bool needs = false;
  for (const auto& p : parts) needs = needs || p.requires_grad();
  if (!needs) return out_t;
  auto* n = out_t.node();
  n->requires_grad = true;
  for (const auto& p : parts) n->parents.push_back(p.node_ptr());
  n->backward = [r, total, widths](detail::Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto& pk = parent(self, k);
      if (pk.requires_grad) {
        auto g = pk.grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j)
            g[i * widths[k] + j] += self.grad[i * total + off + j];
      }
      off += widths[k];
    }
  };
  return out_t;
}

template <typename T>
Tensor<T> slice_last_dim(const Tensor<T>& x, std::size_t start, std::size_t len) {
  const std::size_t c = x.cols(), r = x.numel() / c;
  if (start + len > c) throw ShapeError("slice_last_dim [" + std::to_string(start) + ", " +
                                        std::to_string(start + len) + ") outside " + shape_str(x.shape()));
  std::vector<T> out(r * len);
  auto d = x.data();
  for (std::size_t i = 0; i < r; ++i) std::copy_n(d.data() + i * c + start, len, out.data() + i * len);
  Shape shape = x.shape();
  shape.back() = len;
  return result<T>("slice_last_dim", std::move(shape), std::move(out), {x}, [r, c, start, len](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < len; ++j) g[i * c + start + j] += self.grad[i * len + j];
  });
}

template <typename T>
Tensor<T> embedding_lookup(std::span<const int> ids, const Tensor<T>& table) {
  require_matrix(table, "embedding_lookup");
  const std::size_t d = table.cols(), v = table.rows();
  auto idx = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  std::vector<T> out(ids.size() * d);
  auto td = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v)
      throw ShapeError("embedding id " + std::to_string(ids[i]) + " outside table of " + std::to_string(v) + " rows");
    std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  return result<T>("embedding_lookup", {ids.size(), d}, std::move(out), {table}, [idx, d](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < idx->size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g[static_cast<std::size_t>((*idx)[i]) * d + j] += self.grad[i * d + j];
  });
}

template <typename T>
Tensor<T> relative_logits(const Tensor<T>& q, const Tensor<T>& table, int clip) {
  require_matrix(q, "relative_logits");
  require_matrix(table, "relative_logits");
  const std::size_t l = q.rows(), dk = q.cols();
  const std::size_t span = static_cast<std::size_t>(2 * clip + 1);
  if (table.rows() != span || table.cols() != dk) mismatch("relative_logits", q.shape(), table.shape());
  auto bucket = [clip](std::size_t i, std::size_t j) {
    const long d = static_cast<long>(j) - static_cast<long>(i);
    return static_cast<std::size_t>(std::clamp<long>(d, -clip, clip) + clip);
  };
  RowMat<T> proj = view(q.data(), l, dk) * view(table.data(), span, dk).transpose();
  std::vector<T> out(l * l);
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < l; ++j)
      out[i * l + j] = proj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(bucket(i, j)));
  return result<T>("relative_logits", {l, l}, std::move(out), {q, table},
                   [l, dk, span, bucket](detail::Node<T>& self) {
    RowMat<T> dproj = RowMat<T>::Zero(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(span));
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j)
        dproj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(bucket(i, j))) += self.grad[i * l + j];
    auto& pq = parent(self, 0);
    auto& pt = parent(self, 1);
    if (pq.requires_grad)
      view(pq.grad_buffer(), l, dk).noalias() += dproj * view<T>(std::span<const T>(pt.data), span, dk);
    if (pt.requires_grad)
      view(pt.grad_buffer(), span, dk).noalias() += dproj.transpose() * view<T>(std::span<const T>(pq.data), l, dk);
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> targets, Reduction reduction, int ignore) {
  require_matrix(logits, "cross_entropy");
  const std::size_t t = logits.rows(), v = logits.cols();
  if (targets.size() != t) mismatch("cross_entropy", logits.shape(), {targets.size()});
  auto probs = std::make_shared<std::vector<T>>(t * v);
  auto tg = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  auto ld = logits.data();
  T total = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < t; ++i) {
    const T* row = ld.data() + i * v;
    T mx = *std::max_element(row, row + v);
    T z = 0;
    for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    const T logz = std::log(z) + mx;
    for (std::size_t j = 0; j < v; ++j) (*probs)[i * v + j] = std::exp(row[j] - logz);
    if (targets[i] == ignore) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v)
      throw ShapeError("target id " + std::to_string(targets[i]) + " outside vocabulary of " + std::to_string(v));
    total += logz - row[targets[i]];
    ++count;
  }
  const T denom = reduction == Reduction::kMean && count > 0 ? static_cast<T>(count) : T(1);
  return result<T>("cross_entropy", {1}, {total / denom}, {logits},
                   [t, v, probs, tg, denom, ignore](detail::Node<T>& self) {
    auto g = parent(self, 0).grad_buffer();
    const T s = self.grad[0] / denom;
    for (std::size_t i = 0; i < t; ++i) {
      if ((*tg)[i] == ignore) continue;
      for (std::size_t j = 0; j < v; ++j) g[i * v + j] += s * (*probs)[i * v + j];
      g[i * v + static_cast<std::size_t>((*tg)[i])] -= s;
    }
  });
}

#define SIT_INSTANTIATE(T)                                                                 \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> matmul_bt(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> transpose_last_two(const Tensor<T>&);                                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> scale(const Tensor<T>&, T);                                          \
  template Tensor<T> relu(const Tensor<T>&);                                              \
  template Tensor<T> sum(const Tensor<T>&);                                               \
  template Tensor<T> softmax_rows(const Tensor<T>&, const Mask*);                         \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> dropout(const Tensor<T>&, double, std::mt19937_64&);                 \
  template Tensor<T> concat_last_dim(std::span<const Tensor<T>>);                         \
  template Tensor<T> slice_last_dim(const Tensor<T>&, std::size_t, std::size_t);          \
  template Tensor<T> embedding_lookup(std::span<const int>, const Tensor<T>&);            \
  template Tensor<T> relative_logits(const Tensor<T>&, const Tensor<T>&, int);            \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const int>, Reduction, int);

SIT_INSTANTIATE(float)
SIT_INSTANTIATE(double)

}  // namespace sit::numkit
