#include <cmath>

#include "hwlab/autodiff/tensor.hpp"

namespace hwlab::ad {

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + "," +
         std::to_string(s[3]) + "]";
}

template <class T>
bool Tensor<T>::all_finite() const {
  for (T v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

template <class T>
Tensor<T> truncated_normal(Shape shape, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<T> t(shape);
  for (auto& v : t.values()) {
    double z;
    do {
      z = normal(rng);
    } while (std::abs(z) > 2.0);
    v = static_cast<T>(z * std);
  }
  return t;
}

template <class T>
Tensor<T> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> truncated_normal<float>(Shape, double, std::mt19937_64&);
template Tensor<double> truncated_normal<double>(Shape, double, std::mt19937_64&);
template Tensor<float> uniform<float>(Shape, double, double, std::mt19937_64&);
template Tensor<double> uniform<double>(Shape, double, double, std::mt19937_64&);

}  // namespace hwlab::ad
