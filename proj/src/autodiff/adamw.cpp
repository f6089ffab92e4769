#include "hwlab/autodiff/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace hwlab::ad {

void AdamWConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("AdamW: lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("AdamW: betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("AdamW: eps must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("AdamW: weight_decay must be >= 0");
}

template <class T>
AdamW<T>::AdamW(std::vector<Var<T>> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  config_.validate();
  for (const auto& p : params_) {
    m_.emplace_back(p.value().numel(), 0.0);
    v_.emplace_back(p.value().numel(), 0.0);
  }
}

template <class T>
void AdamW<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var<T>& p = params_[k];
    const Tensor<T>& g = p.grad();
    Tensor<T>& w = p.mutable_value();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.numel(); ++i) {
      double pi = static_cast<double>(w[i]);
      pi -= config_.lr * config_.weight_decay * pi;
      const double gi = static_cast<double>(g[i]);
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      pi -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
      w[i] = static_cast<T>(pi);
    }
  }
}

template <class T>
void AdamW<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace hwlab::ad
