#include "sit/numkit/finite_diff.hpp"

#include <algorithm>
#include <cmath>

namespace sit::numkit {

template <typename T>
Tensor<T> finite_diff(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps) {
  std::vector<T> grad(x.numel());
  const std::vector<T> base(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto plus = base;
    auto minus = base;
    plus[i] += eps;
    minus[i] -= eps;
    const T fp = f(Tensor<T>::from(x.shape(), std::move(plus)));
    const T fm = f(Tensor<T>::from(x.shape(), std::move(minus)));
    grad[i] = (fp - fm) / (T(2) * eps);
  }
  return Tensor<T>::from(x.shape(), std::move(grad));
}

template <typename T>
std::vector<T> finite_diff_inplace(const std::function<T()>& f, Tensor<T>& x, T eps) {
  auto d = x.mutable_data();
  std::vector<T> grad(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const T keep = d[i];
    d[i] = keep + eps;
    const T fp = f();
    d[i] = keep - eps;
    const T fm = f();
    d[i] = keep;
    grad[i] = (fp - fm) / (T(2) * eps);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

template Tensor<float> finite_diff(const std::function<float(const Tensor<float>&)>&, const Tensor<float>&, float);
template Tensor<double> finite_diff(const std::function<double(const Tensor<double>&)>&, const Tensor<double>&, double);
template std::vector<float> finite_diff_inplace(const std::function<float()>&, Tensor<float>&, float);
template std::vector<double> finite_diff_inplace(const std::function<double()>&, Tensor<double>&, double);

}  // namespace sit::numkit
