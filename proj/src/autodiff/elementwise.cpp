#include <cmath>
#include <numbers>

#include "hwlab/autodiff/ops.hpp"

namespace hwlab::ad {

namespace {

template <class T>
T* grad_or_null(const Var<T>& v) {
  return v.requires_grad() ? v.get()->grad_buffer().data() : nullptr;
}

std::size_t scalar_batch(const Shape& s, std::size_t batch, const char* what) {
  if (s[1] != 1 || s[2] != 1 || s[3] != 1 || (s[0] != 1 && s[0] != batch))
    throw ShapeError(std::string(what) + ": scalar operand has shape " + to_string(s));
  return s[0];
}

}  // namespace

template <class T>
Var<T> gelu(const Var<T>& x) {
  const std::size_t count = x.value().numel();
  Tensor<T> y(x.shape());
  const T* xv = x.value().data();
  constexpr T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
  for (std::size_t i = 0; i < count; ++i) y[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
  return make_result<T>(std::move(y), {x}, [count](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    T* dx = x.get()->grad_buffer().data();
    const T* xv = x.value().data();
    const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
    const T inv_sqrt2pi = static_cast<T>(1.0 / std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < count; ++i) {
      const T cdf = T(0.5) * (T(1) + std::erf(xv[i] * inv_sqrt2));
      const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * xv[i] * xv[i]);
      dx[i] += self.grad[i] * (cdf + xv[i] * pdf);
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("add: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
    for (int k = 0; k < 2; ++k)
      if (T* d = grad_or_null(self.parents[k]))
        for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += self.grad[i];
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("sub: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
    if (T* d = grad_or_null(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += self.grad[i];
    if (T* d = grad_or_null(self.parents[1]))
      for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] -= self.grad[i];
  });
}

template <class T>
Var<T> scale(const Var<T>& x, double s) {
  const T f = static_cast<T>(s);
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = x.value()[i] * f;
  return make_result<T>(std::move(y), {x}, [f](Node<T>& self) {
    T* d = self.parents[0].get()->grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) d[i] += self.grad[i] * f;
  });
}

template <class T>
Var<T> mul_batch_scalar(const Var<T>& x, const Var<T>& s) {
  const Shape xs = x.shape();
  const std::size_t sb = scalar_batch(s.shape(), xs[0], "mul_batch_scalar");
  const std::size_t per = xs[1] * xs[2] * xs[3];
  Tensor<T> y(xs);
  for (std::size_t b = 0; b < xs[0]; ++b) {
    const T v = s.value()[sb == 1 ? 0 : b];
    for (std::size_t i = 0; i < per; ++i) y[b * per + i] = x.value()[b * per + i] * v;
  }
  return make_result<T>(std::move(y), {x, s}, [sb, per](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& s = self.parents[1];
    T* dx = grad_or_null(x);
    T* ds = grad_or_null(s);
    for (std::size_t b = 0; b < x.shape()[0]; ++b) {
      const std::size_t si = sb == 1 ? 0 : b;
      const T v = s.value()[si];
      T acc = 0;
      for (std::size_t i = 0; i < per; ++i) {
        const T g = self.grad[b * per + i];
        if (dx) dx[b * per + i] += g * v;
        acc += g * x.value()[b * per + i];
      }
      if (ds) ds[si] += acc;
    }
  });
}

template <class T>
Var<T> broadcast_plane(const Var<T>& s, std::size_t batch, std::size_t height, std::size_t width) {
  const std::size_t sb = scalar_batch(s.shape(), batch, "broadcast_plane");
  const std::size_t plane = height * width;
  Tensor<T> y({batch, 1, height, width});
  for (std::size_t b = 0; b < batch; ++b)
    std::fill(y.data() + b * plane, y.data() + (b + 1) * plane, s.value()[sb == 1 ? 0 : b]);
  return make_result<T>(std::move(y), {s}, [sb, batch, plane](Node<T>& self) {
    T* ds = self.parents[0].get()->grad_buffer().data();
    for (std::size_t b = 0; b < batch; ++b) {
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += self.grad[b * plane + i];
      ds[sb == 1 ? 0 : b] += acc;
    }
  });
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = parts.front().shape();
  std::size_t channels = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s[0] != first[0] || s[2] != first[2] || s[3] != first[3])
      throw ShapeError("concat_channels: " + to_string(s) + " vs " + to_string(first));
    channels += s[1];
  }
  const std::size_t plane = first[2] * first[3];
  Tensor<T> y({first[0], channels, first[2], first[3]});
  for (std::size_t b = 0; b < first[0]; ++b) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t block = p.shape()[1] * plane;
      const T* src = p.value().data() + b * block;
      std::copy(src, src + block, y.data() + (b * channels + offset) * plane);
      offset += p.shape()[1];
    }
  }
  return make_result<T>(std::move(y), parts, [channels, plane](Node<T>& self) {
    const std::size_t batch = self.value.shape()[0];
    std::size_t offset = 0;
    for (const auto& p : self.parents) {
      const std::size_t block = p.shape()[1] * plane;
      if (T* d = grad_or_null(p))
        for (std::size_t b = 0; b < batch; ++b) {
          const T* g = self.grad.data() + (b * channels + offset) * plane;
          for (std::size_t i = 0; i < block; ++i) d[b * block + i] += g[i];
        }
      offset += p.shape()[1];
    }
  });
}

template <class T>
Var<T> slice_channels(const Var<T>& x, std::size_t first, std::size_t count) {
  const Shape xs = x.shape();
  if (count == 0 || first + count > xs[1])
    throw ShapeError("slice_channels: [" + std::to_string(first) + ", +" + std::to_string(count) + ") out of " +
                     to_string(xs));
  const std::size_t plane = xs[2] * xs[3];
  Tensor<T> y({xs[0], count, xs[2], xs[3]});
  for (std::size_t b = 0; b < xs[0]; ++b) {
    const T* src = x.value().data() + (b * xs[1] + first) * plane;
    std::copy(src, src + count * plane, y.data() + b * count * plane);
  }
  return make_result<T>(std::move(y), {x}, [first, count, plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const std::size_t channels = x.shape()[1];
    T* d = x.get()->grad_buffer().data();
    for (std::size_t b = 0; b < x.shape()[0]; ++b) {
      T* dst = d + (b * channels + first) * plane;
      const T* g = self.grad.data() + b * count * plane;
      for (std::size_t i = 0; i < count * plane; ++i) dst[i] += g[i];
    }
  });
}

template <class T>
Var<T> mean_square(const Var<T>& x) {
  const std::size_t count = x.value().numel();
  if (count == 0) throw ShapeError("mean_square: empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) acc += static_cast<double>(x.value()[i]) * x.value()[i];
  Tensor<T> y({1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  return make_result<T>(std::move(y), {x}, [count](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    T* d = x.get()->grad_buffer().data();
    const T f = self.grad[0] * T(2) / static_cast<T>(count);
    for (std::size_t i = 0; i < count; ++i) d[i] += f * x.value()[i];
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.value().numel(); ++i) acc += x.value()[i];
  Tensor<T> y({1, 1, 1, 1}, static_cast<T>(acc));
  return make_result<T>(std::move(y), {x}, [](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    T* d = x.get()->grad_buffer().data();
    for (std::size_t i = 0; i < x.value().numel(); ++i) d[i] += self.grad[0];
  });
}

#define HWLAB_INSTANTIATE_ELEMENTWISE(T)                                                       \
  template Var<T> gelu<T>(const Var<T>&);                                                      \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> scale<T>(const Var<T>&, double);                                             \
  template Var<T> mul_batch_scalar<T>(const Var<T>&, const Var<T>&);                           \
  template Var<T> broadcast_plane<T>(const Var<T>&, std::size_t, std::size_t, std::size_t);    \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                              \
  template Var<T> slice_channels<T>(const Var<T>&, std::size_t, std::size_t);                  \
  template Var<T> mean_square<T>(const Var<T>&);                                               \
  template Var<T> sum<T>(const Var<T>&);

HWLAB_INSTANTIATE_ELEMENTWISE(float)
HWLAB_INSTANTIATE_ELEMENTWISE(double)

}  // namespace hwlab::ad
