#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hwlab::ad {

/// Extents in (batch, channel, height, width) order.
using Shape = std::array<std::size_t, 4>;

std::string to_string(const Shape& s);
inline std::size_t numel(const Shape& s) { return s[0] * s[1] * s[2] * s[3]; }

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense NCHW tensor.
template <class T>
class Tensor {
 public:
  Tensor() : shape_{0, 0, 0, 0} {}
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(ad::numel(shape), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != ad::numel(shape_)) throw ShapeError("payload size does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  std::size_t plane() const { return shape_[2] * shape_[3]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  T at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool empty() const { return data_.empty(); }
  bool all_finite() const;

  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  Shape shape_;
  std::vector<T> data_;
};

/// Normal(0, std) truncated to +-2 std, by rejection.
template <class T>
Tensor<T> truncated_normal(Shape shape, double std, std::mt19937_64& rng);

template <class T>
Tensor<T> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng);

/// Element-wise cast between precisions.
template <class To, class From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(t[i]);
  return Tensor<To>(t.shape(), std::move(out));
}

}  // namespace hwlab::ad
