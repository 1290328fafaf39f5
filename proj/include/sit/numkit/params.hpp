#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sit/numkit/tensor.hpp"

namespace sit::numkit {

template <typename T>
struct Parameter {
  std::string name;  // hierarchical, e.g. "encoder.layer0.attn.wq"
  Tensor<T> tensor;
};

enum class Init {
  kZeros,
  kOnes,
  kUniformFanIn,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = rows
  kNormal002,     // N(0, 0.02)
};

// Owns a model's parameters in creation order. Names are unique.
template <typename T>
class ParamStore {
 public:
  Tensor<T> create(const std::string& name, Shape shape, Init init, std::mt19937_64& rng);

  const std::vector<Parameter<T>>& params() const { return params_; }
  const Tensor<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t numel() const;
  void zero_grad();

 private:
  std::vector<Parameter<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sit::numkit
