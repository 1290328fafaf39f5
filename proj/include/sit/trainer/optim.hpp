#pragma once

#include <cstddef>
#include <vector>

#include "sit/numkit/params.hpp"

namespace sit::trainer {

// Linear warmup to `peak` over the first warmup_steps, then linear decay.
// at(0) = peak / warmup_steps.
struct LinearSchedule {
  double peak = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  static LinearSchedule from_fraction(double peak, double warmup_frac, std::size_t total_steps);
  double at(std::size_t step) const;
};

// Adam with decoupled weight decay applied to matrices (rank >= 2).
template <typename T>
class AdamW {
 public:
  AdamW(const numkit::ParamStore<T>& store, double weight_decay, double beta1 = 0.9, double beta2 = 0.98,
        double eps = 1e-9);

  void step(numkit::ParamStore<T>& store, double lr);
  std::size_t steps() const { return t_; }

 private:
  double weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(numkit::ParamStore<T>& store, double max_norm);

}  // namespace sit::trainer
