#pragma once

#include <vector>

#include "hwlab/autodiff/graph.hpp"

namespace hwlab::ad {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

/// AdamW with decoupled weight decay. Moments are kept in 64-bit regardless
/// of the parameter precision.
template <class T>
class AdamW {
 public:
  AdamW(std::vector<Var<T>> params, AdamWConfig config);

  /// Applies one update from the parameters' accumulated gradients.
  void step();
  void zero_grad();

  std::size_t step_count() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<Var<T>>& params() const { return params_; }

 private:
  std::vector<Var<T>> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace hwlab::ad
