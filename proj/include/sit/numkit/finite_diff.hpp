#pragma once

#include <functional>

#include "sit/numkit/tensor.hpp"

namespace sit::numkit {

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / 2 eps for every
// coordinate of x. `f` receives perturbed copies of x.
template <typename T>
Tensor<T> finite_diff(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x, T eps);

// Same, but perturbs `x` in place (e.g. a model parameter read by `f`) and
// restores it afterwards.
template <typename T>
std::vector<T> finite_diff_inplace(const std::function<T()>& f, Tensor<T>& x, T eps);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace sit::numkit
