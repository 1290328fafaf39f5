#include "sit/trainer/optim.hpp"

#include <cmath>

namespace sit::trainer {

LinearSchedule LinearSchedule::from_fraction(double peak, double warmup_frac, std::size_t total_steps) {
  LinearSchedule s;
  s.peak = peak;
  s.total_steps = std::max<std::size_t>(total_steps, 1);
  s.warmup_steps = static_cast<std::size_t>(std::ceil(warmup_frac * static_cast<double>(s.total_steps)));
  return s;
}

double LinearSchedule::at(std::size_t step) const {
  if (step < warmup_steps) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  return peak * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup_steps);
}

template <typename T>
AdamW<T>::AdamW(const numkit::ParamStore<T>& store, double weight_decay, double beta1, double beta2, double eps)
    : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : store.params()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

template <typename T>
void AdamW<T>::step(numkit::ParamStore<T>& store, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto& params = store.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto tensor = params[k].tensor;
    if (!tensor.has_grad()) continue;
    auto data = tensor.mutable_data();
    auto grad = tensor.grad();
    const bool decay = tensor.rank() >= 2 && weight_decay_ > 0.0;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      double x = static_cast<double>(data[i]);
      if (decay) x -= lr * weight_decay_ * x;
      x -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
      data[i] = static_cast<T>(x);
    }
  }
}

template <typename T>
double clip_grad_norm(numkit::ParamStore<T>& store, double max_norm) {
  double sq = 0.0;
  for (const auto& p : store.params())
    for (T g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / (norm + 1e-12);
    for (const auto& p : store.params()) {
      auto t = p.tensor;
      if (!t.has_grad()) continue;
      for (T& g : t.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * f);
    }
  }
  return norm;
}

template class AdamW<float>;
template class AdamW<double>;
template double clip_grad_norm<float>(numkit::ParamStore<float>&, double);
template double clip_grad_norm<double>(numkit::ParamStore<double>&, double);

}  // namespace sit::trainer
