#include <cmath>

#include "hwlab/autodiff/ops.hpp"

namespace hwlab::ad {

namespace {

template <class T>
void check_affine(const Var<T>& p, std::size_t channels, const char* what) {
  if (!p || p.shape() != Shape{1, channels, 1, 1})
    throw ShapeError(std::string(what) + " must have shape [1," + std::to_string(channels) + ",1,1]");
}

}  // namespace

template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps) {
  const Shape s = x.shape();
  const std::size_t channels = s[1], plane = s[2] * s[3];
  check_affine(gamma, channels, "layer_norm gamma");
  check_affine(beta, channels, "layer_norm beta");

  Tensor<T> y(s);
  // Normalized activations and inverse std, kept for the backward pass.
  auto xhat = std::make_shared<std::vector<T>>(x.value().numel());
  auto rstd = std::make_shared<std::vector<T>>(s[0] * plane);
  const T* g = gamma.value().data();
  const T* bt = beta.value().data();
  for (std::size_t b = 0; b < s[0]; ++b) {
    const T* xb = x.value().data() + b * channels * plane;
    T* yb = y.data() + b * channels * plane;
    T* hb = xhat->data() + b * channels * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      T mean = 0;
      for (std::size_t c = 0; c < channels; ++c) mean += xb[c * plane + i];
      mean /= static_cast<T>(channels);
      T var = 0;
      for (std::size_t c = 0; c < channels; ++c) {
        const T d = xb[c * plane + i] - mean;
        var += d * d;
      }
      var /= static_cast<T>(channels);
      const T r = T(1) / std::sqrt(var + static_cast<T>(eps));
      (*rstd)[b * plane + i] = r;
      for (std::size_t c = 0; c < channels; ++c) {
        const T h = (xb[c * plane + i] - mean) * r;
        hb[c * plane + i] = h;
        yb[c * plane + i] = g[c] * h + bt[c];
      }
    }
  }

  return make_result<T>(std::move(y), {x, gamma, beta}, [xhat, rstd, channels, plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& gamma = self.parents[1];
    const Var<T>& beta = self.parents[2];
    const std::size_t batch = x.shape()[0];
    const T* g = gamma.value().data();
    T* dg = gamma.requires_grad() ? gamma.get()->grad_buffer().data() : nullptr;
    T* db = beta.requires_grad() ? beta.get()->grad_buffer().data() : nullptr;
    T* dx = x.requires_grad() ? x.get()->grad_buffer().data() : nullptr;
    const T inv_c = T(1) / static_cast<T>(channels);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* dy = self.grad.data() + b * channels * plane;
      const T* hb = xhat->data() + b * channels * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        T sum_dh = 0, sum_dh_h = 0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t j = c * plane + i;
          if (dg) dg[c] += dy[j] * hb[j];
          if (db) db[c] += dy[j];
          const T dh = dy[j] * g[c];
          sum_dh += dh;
          sum_dh_h += dh * hb[j];
        }
        if (!dx) continue;
        const T r = (*rstd)[b * plane + i];
        T* dxb = dx + b * channels * plane;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t j = c * plane + i;
          const T dh = dy[j] * g[c];
          dxb[j] += r * (dh - inv_c * sum_dh - hb[j] * inv_c * sum_dh_h);
        }
      }
    }
  });
}

template <class T>
Var<T> grn(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps) {
  const Shape s = x.shape();
  const std::size_t channels = s[1], plane = s[2] * s[3];
  check_affine(gamma, channels, "grn gamma");
  check_affine(beta, channels, "grn beta");

  Tensor<T> y(s);
  auto norms = std::make_shared<std::vector<T>>(s[0] * channels);
  auto means = std::make_shared<std::vector<T>>(s[0]);
  const T* g = gamma.value().data();
  const T* bt = beta.value().data();
  for (std::size_t b = 0; b < s[0]; ++b) {
    T mean = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      const T* xc = x.value().data() + (b * channels + c) * plane;
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += xc[i] * xc[i];
      (*norms)[b * channels + c] = std::sqrt(acc);
      mean += std::sqrt(acc);
    }
    mean /= static_cast<T>(channels);
    (*means)[b] = mean;
    const T denom = mean + static_cast<T>(eps);
    for (std::size_t c = 0; c < channels; ++c) {
      const T nc = (*norms)[b * channels + c] / denom;
      const T* xc = x.value().data() + (b * channels + c) * plane;
      T* yc = y.data() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) yc[i] = g[c] * (xc[i] * nc) + bt[c] + xc[i];
    }
  }

  return make_result<T>(std::move(y), {x, gamma, beta}, [norms, means, channels, plane, eps](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& gamma = self.parents[1];
    const Var<T>& beta = self.parents[2];
    const std::size_t batch = x.shape()[0];
    const T* g = gamma.value().data();
    T* dg = gamma.requires_grad() ? gamma.get()->grad_buffer().data() : nullptr;
    T* db = beta.requires_grad() ? beta.get()->grad_buffer().data() : nullptr;
    T* dx = x.requires_grad() ? x.get()->grad_buffer().data() : nullptr;
    std::vector<T> dn(channels);
    for (std::size_t b = 0; b < batch; ++b) {
      const T denom = (*means)[b] + static_cast<T>(eps);
      T sum_dn_g = 0;
      for (std::size_t c = 0; c < channels; ++c) {
        const T* xc = x.value().data() + (b * channels + c) * plane;
        const T* dy = self.grad.data() + (b * channels + c) * plane;
        T dot = 0, dsum = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          dot += dy[i] * xc[i];
          dsum += dy[i];
        }
        const T gc = (*norms)[b * channels + c];
        if (dg) dg[c] += dot * gc / denom;
        if (db) db[c] += dsum;
        dn[c] = dot * g[c];
        sum_dn_g += dn[c] * gc;
      }
      if (!dx) continue;
      for (std::size_t c = 0; c < channels; ++c) {
        const T gc = (*norms)[b * channels + c];
        const T nc = gc / denom;
        const T dG = dn[c] / denom - sum_dn_g / (static_cast<T>(channels) * denom * denom);
        const T coef = gc > T(0) ? dG / gc : T(0);
        const T* xc = x.value().data() + (b * channels + c) * plane;
        const T* dy = self.grad.data() + (b * channels + c) * plane;
        T* dxc = dx + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dxc[i] += dy[i] * (g[c] * nc + T(1)) + coef * xc[i];
      }
    }
  });
}

template Var<float> layer_norm<float>(const Var<float>&, const Var<float>&, const Var<float>&, double);
template Var<double> layer_norm<double>(const Var<double>&, const Var<double>&, const Var<double>&, double);
template Var<float> grn<float>(const Var<float>&, const Var<float>&, const Var<float>&, double);
template Var<double> grn<double>(const Var<double>&, const Var<double>&, const Var<double>&, double);

}  // namespace hwlab::ad
