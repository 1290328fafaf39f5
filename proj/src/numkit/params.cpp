#include "sit/numkit/params.hpp"

#include <cmath>

namespace sit::numkit {

template <typename T>
Tensor<T> ParamStore<T>::create(const std::string& name, Shape shape, Init init,
                                std::mt19937_64& rng) {
  if (contains(name)) throw ShapeError("duplicate parameter name " + name);
  const std::size_t n = shape_numel(shape);
  std::vector<T> data(n, T(0));
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(data.begin(), data.end(), T(1));
      break;
    case Init::kUniformFanIn: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape.front()));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (T& x : data) x = static_cast<T>(u(rng));
      break;
    }
    case Init::kNormal002: {
      std::normal_distribution<double> nd(0.0, 0.02);
      for (T& x : data) x = static_cast<T>(nd(rng));
      break;
    }
  }
  auto t = Tensor<T>::from(std::move(shape), std::move(data), true);
  index_.emplace(name, params_.size());
  params_.push_back({name, t});
  return t;
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter " + name);
  return params_[it->second].tensor;
}

template <typename T>
std::size_t ParamStore<T>::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace sit::numkit
