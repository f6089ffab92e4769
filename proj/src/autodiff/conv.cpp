#include <Eigen/Core>

#include "hwlab/autodiff/ops.hpp"

namespace hwlab::ad {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

/// Source index along one axis of the padded buffer; -1 means "zero".
long source_index(long i, long n, PaddingMode mode) {
  switch (mode) {
    case PaddingMode::circular:
      return ((i % n) + n) % n;
    case PaddingMode::zero:
      return (i < 0 || i >= n) ? -1 : i;
    case PaddingMode::reflect: {
      if (n == 1) return 0;
      const long period = 2 * (n - 1);
      long j = i < 0 ? -i : i;
      j %= period;
      return j >= n ? period - j : j;
    }
  }
  return -1;
}

/// Padding geometry for one spatial plane of extent h x w.
struct PadMap {
  std::size_t h, w, hp, wp;
  std::vector<long> rows, cols;

  PadMap(std::size_t h_, std::size_t w_, std::size_t pad, PaddingMode mode)
      : h(h_), w(w_), hp(h_ + 2 * pad), wp(w_ + 2 * pad), rows(hp), cols(wp) {
    if (mode == PaddingMode::reflect && pad > 0 && (pad >= h || pad >= w))
      throw ShapeError("reflect padding must be smaller than the spatial extent");
    const auto p = static_cast<long>(pad);
    for (std::size_t i = 0; i < hp; ++i) rows[i] = source_index(static_cast<long>(i) - p, static_cast<long>(h), mode);
    for (std::size_t j = 0; j < wp; ++j) cols[j] = source_index(static_cast<long>(j) - p, static_cast<long>(w), mode);
  }

  template <class T>
  void pad(const T* src, T* dst) const {
    for (std::size_t i = 0; i < hp; ++i) {
      T* d = dst + i * wp;
      if (rows[i] < 0) {
        std::fill(d, d + wp, T(0));
        continue;
      }
      const T* s = src + static_cast<std::size_t>(rows[i]) * w;
      for (std::size_t j = 0; j < wp; ++j) d[j] = cols[j] < 0 ? T(0) : s[cols[j]];
    }
  }

  /// Adjoint of pad: scatter-adds a padded-plane gradient into the source.
  template <class T>
  void unpad_add(const T* padded, T* dst) const {
    for (std::size_t i = 0; i < hp; ++i) {
      if (rows[i] < 0) continue;
      const T* s = padded + i * wp;
      T* d = dst + static_cast<std::size_t>(rows[i]) * w;
      for (std::size_t j = 0; j < wp; ++j)
        if (cols[j] >= 0) d[cols[j]] += s[j];
    }
  }
};

struct ConvGeometry {
  std::size_t kh, kw, stride, ho, wo;
};

template <class T>
void im2col(const T* padded, std::size_t channels, const PadMap& pm, const ConvGeometry& g, T* col) {
  const std::size_t out_plane = g.ho * g.wo;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = padded + c * pm.hp * pm.wp;
    for (std::size_t a = 0; a < g.kh; ++a) {
      for (std::size_t b = 0; b < g.kw; ++b) {
        T* row = col + ((c * g.kh + a) * g.kw + b) * out_plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const T* s = src + (oy * g.stride + a) * pm.wp + b;
          T* d = row + oy * g.wo;
          if (g.stride == 1) {
            std::copy(s, s + g.wo, d);
          } else {
            for (std::size_t ox = 0; ox < g.wo; ++ox) d[ox] = s[ox * g.stride];
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, std::size_t channels, const PadMap& pm, const ConvGeometry& g, T* padded) {
  const std::size_t out_plane = g.ho * g.wo;
  for (std::size_t c = 0; c < channels; ++c) {
    T* dst = padded + c * pm.hp * pm.wp;
    for (std::size_t a = 0; a < g.kh; ++a) {
      for (std::size_t b = 0; b < g.kw; ++b) {
        const T* row = col + ((c * g.kh + a) * g.kw + b) * out_plane;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          T* d = dst + (oy * g.stride + a) * pm.wp + b;
          const T* s = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) d[ox * g.stride] += s[ox];
        }
      }
    }
  }
}

ConvGeometry conv_geometry(const PadMap& pm, std::size_t kh, std::size_t kw, std::size_t stride) {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (pm.hp < kh || pm.wp < kw) throw ShapeError("kernel larger than padded input");
  if ((pm.hp - kh) % stride != 0 || (pm.wp - kw) % stride != 0)
    throw ShapeError("padded extent is not compatible with kernel and stride");
  return {kh, kw, stride, (pm.hp - kh) / stride + 1, (pm.wp - kw) / stride + 1};
}

template <class T>
void check_bias(const Var<T>& bias, std::size_t channels) {
  if (bias && bias.shape() != Shape{1, channels, 1, 1})
    throw ShapeError("bias must have shape [1," + std::to_string(channels) + ",1,1], got " + to_string(bias.shape()));
}

template <class T>
void add_bias(Tensor<T>& y, const Var<T>& bias) {
  if (!bias) return;
  const auto& s = y.shape();
  const std::size_t plane = s[2] * s[3];
  for (std::size_t b = 0; b < s[0]; ++b)
    for (std::size_t c = 0; c < s[1]; ++c) {
      T* d = y.data() + (b * s[1] + c) * plane;
      const T v = bias.value()[c];
      for (std::size_t i = 0; i < plane; ++i) d[i] += v;
    }
}

template <class T>
void bias_backward(Node<T>& self, const Var<T>& bias) {
  if (!bias || !bias.requires_grad()) return;
  const auto& s = self.value.shape();
  const std::size_t plane = s[2] * s[3];
  auto& db = bias.get()->grad_buffer();
  for (std::size_t b = 0; b < s[0]; ++b)
    for (std::size_t c = 0; c < s[1]; ++c) {
      const T* g = self.grad.data() + (b * s[1] + c) * plane;
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += g[i];
      db[c] += acc;
    }
}

}  // namespace

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws[1] != xs[1])
    throw ShapeError("conv2d: weight " + to_string(ws) + " does not accept input " + to_string(xs));
  check_bias(bias, ws[0]);
  const PadMap pm(xs[2], xs[3], opt.padding, opt.mode);
  const ConvGeometry g = conv_geometry(pm, ws[2], ws[3], opt.stride);
  const std::size_t cin = xs[1], cout = ws[0], k = cin * g.kh * g.kw, out_plane = g.ho * g.wo;

  Tensor<T> y({xs[0], cout, g.ho, g.wo});
  std::vector<T> padded(cin * pm.hp * pm.wp), col(k * out_plane);
  const CMapMat<T> wm(weight.value().data(), cout, k);
  for (std::size_t b = 0; b < xs[0]; ++b) {
    for (std::size_t c = 0; c < cin; ++c)
      pm.pad(x.value().data() + (b * cin + c) * xs[2] * xs[3], padded.data() + c * pm.hp * pm.wp);
    im2col(padded.data(), cin, pm, g, col.data());
    MapMat<T> ym(y.data() + b * cout * out_plane, cout, out_plane);
    ym.noalias() = wm * CMapMat<T>(col.data(), k, out_plane);
  }
  add_bias(y, bias);

  return make_result<T>(std::move(y), {x, weight, bias}, [pm, g, cin, cout, k, out_plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& w = self.parents[1];
    bias_backward(self, self.parents[2]);
    const Shape xs = x.shape();
    std::vector<T> padded(cin * pm.hp * pm.wp), col(k * out_plane), dcol(k * out_plane);
    const CMapMat<T> wm(w.value().data(), cout, k);
    for (std::size_t b = 0; b < xs[0]; ++b) {
      const CMapMat<T> dy(self.grad.data() + b * cout * out_plane, cout, out_plane);
      if (w.requires_grad()) {
        for (std::size_t c = 0; c < cin; ++c)
          pm.pad(x.value().data() + (b * cin + c) * xs[2] * xs[3], padded.data() + c * pm.hp * pm.wp);
        im2col(padded.data(), cin, pm, g, col.data());
        MapMat<T> dw(w.get()->grad_buffer().data(), cout, k);
        dw.noalias() += dy * CMapMat<T>(col.data(), k, out_plane).transpose();
      }
      if (x.requires_grad()) {
        MapMat<T>(dcol.data(), k, out_plane).noalias() = wm.transpose() * dy;
        std::fill(padded.begin(), padded.end(), T(0));
        col2im_add(dcol.data(), cin, pm, g, padded.data());
        T* dx = x.get()->grad_buffer().data();
        for (std::size_t c = 0; c < cin; ++c)
          pm.unpad_add(padded.data() + c * pm.hp * pm.wp, dx + (b * cin + c) * xs[2] * xs[3]);
      }
    }
  });
}

template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws[0] != xs[1])
    throw ShapeError("conv_transpose2d: weight " + to_string(ws) + " does not accept input " + to_string(xs));
  if (opt.stride == 0) throw ShapeError("stride must be >= 1");
  const std::size_t cin = xs[1], cout = ws[1], kh = ws[2], kw = ws[3];
  check_bias(bias, cout);
  const long hout = static_cast<long>((xs[2] - 1) * opt.stride + kh) - 2 * static_cast<long>(opt.padding);
  const long wout = static_cast<long>((xs[3] - 1) * opt.stride + kw) - 2 * static_cast<long>(opt.padding);
  if (hout <= 0 || wout <= 0) throw ShapeError("conv_transpose2d: non-positive output extent");
  const PadMap pm(static_cast<std::size_t>(hout), static_cast<std::size_t>(wout), opt.padding, opt.mode);
  const ConvGeometry g = conv_geometry(pm, kh, kw, opt.stride);
  if (g.ho != xs[2] || g.wo != xs[3]) throw ShapeError("conv_transpose2d: inconsistent geometry");
  const std::size_t k = cout * kh * kw, in_plane = xs[2] * xs[3], out_plane = pm.h * pm.w;

  Tensor<T> y({xs[0], cout, pm.h, pm.w});
  std::vector<T> padded(cout * pm.hp * pm.wp), col(k * in_plane);
  const CMapMat<T> wm(weight.value().data(), cin, k);
  for (std::size_t b = 0; b < xs[0]; ++b) {
    const CMapMat<T> xm(x.value().data() + b * cin * in_plane, cin, in_plane);
    MapMat<T>(col.data(), k, in_plane).noalias() = wm.transpose() * xm;
    std::fill(padded.begin(), padded.end(), T(0));
    col2im_add(col.data(), cout, pm, g, padded.data());
    for (std::size_t c = 0; c < cout; ++c)
      pm.unpad_add(padded.data() + c * pm.hp * pm.wp, y.data() + (b * cout + c) * out_plane);
  }
  add_bias(y, bias);

  return make_result<T>(std::move(y), {x, weight, bias}, [pm, g, cin, cout, k, in_plane, out_plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& w = self.parents[1];
    bias_backward(self, self.parents[2]);
    const std::size_t batch = x.shape()[0];
    std::vector<T> padded(cout * pm.hp * pm.wp), col(k * in_plane);
    const CMapMat<T> wm(w.value().data(), cin, k);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < cout; ++c)
        pm.pad(self.grad.data() + (b * cout + c) * out_plane, padded.data() + c * pm.hp * pm.wp);
      im2col(padded.data(), cout, pm, g, col.data());
      const CMapMat<T> dcol(col.data(), k, in_plane);
      if (x.requires_grad()) {
        MapMat<T> dx(x.get()->grad_buffer().data() + b * cin * in_plane, cin, in_plane);
        dx.noalias() += wm * dcol;
      }
      if (w.requires_grad()) {
        const CMapMat<T> xm(x.value().data() + b * cin * in_plane, cin, in_plane);
        MapMat<T> dw(w.get()->grad_buffer().data(), cin, k);
        dw.noalias() += xm * dcol.transpose();
      }
    }
  });
}

template <class T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws[0] != xs[1] || ws[1] != 1)
    throw ShapeError("depthwise_conv2d: weight " + to_string(ws) + " does not match input " + to_string(xs));
  check_bias(bias, xs[1]);
  const PadMap pm(xs[2], xs[3], opt.padding, opt.mode);
  const ConvGeometry g = conv_geometry(pm, ws[2], ws[3], opt.stride);
  const std::size_t channels = xs[1], in_plane = xs[2] * xs[3], out_plane = g.ho * g.wo;

  Tensor<T> y({xs[0], channels, g.ho, g.wo});
  std::vector<T> padded(pm.hp * pm.wp);
  for (std::size_t b = 0; b < xs[0]; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      pm.pad(x.value().data() + (b * channels + c) * in_plane, padded.data());
      T* out = y.data() + (b * channels + c) * out_plane;
      const T* w = weight.value().data() + c * g.kh * g.kw;
      for (std::size_t a = 0; a < g.kh; ++a)
        for (std::size_t bb = 0; bb < g.kw; ++bb) {
          const T wv = w[a * g.kw + bb];
          for (std::size_t oy = 0; oy < g.ho; ++oy) {
            const T* s = padded.data() + (oy * g.stride + a) * pm.wp + bb;
            T* d = out + oy * g.wo;
            for (std::size_t ox = 0; ox < g.wo; ++ox) d[ox] += wv * s[ox * g.stride];
          }
        }
    }
  }
  add_bias(y, bias);

  return make_result<T>(std::move(y), {x, weight, bias}, [pm, g, channels, in_plane, out_plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& w = self.parents[1];
    bias_backward(self, self.parents[2]);
    const std::size_t batch = x.shape()[0];
    std::vector<T> padded(pm.hp * pm.wp), dpadded(pm.hp * pm.wp);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const T* dy = self.grad.data() + (b * channels + c) * out_plane;
        if (w.requires_grad()) {
          pm.pad(x.value().data() + (b * channels + c) * in_plane, padded.data());
          T* dw = w.get()->grad_buffer().data() + c * g.kh * g.kw;
          for (std::size_t a = 0; a < g.kh; ++a)
            for (std::size_t bb = 0; bb < g.kw; ++bb) {
              T acc = 0;
              for (std::size_t oy = 0; oy < g.ho; ++oy) {
                const T* s = padded.data() + (oy * g.stride + a) * pm.wp + bb;
                const T* d = dy + oy * g.wo;
                for (std::size_t ox = 0; ox < g.wo; ++ox) acc += d[ox] * s[ox * g.stride];
              }
              dw[a * g.kw + bb] += acc;
            }
        }
        if (x.requires_grad()) {
          std::fill(dpadded.begin(), dpadded.end(), T(0));
          const T* wv = w.value().data() + c * g.kh * g.kw;
          for (std::size_t a = 0; a < g.kh; ++a)
            for (std::size_t bb = 0; bb < g.kw; ++bb) {
              const T k = wv[a * g.kw + bb];
              for (std::size_t oy = 0; oy < g.ho; ++oy) {
                T* s = dpadded.data() + (oy * g.stride + a) * pm.wp + bb;
                const T* d = dy + oy * g.wo;
                for (std::size_t ox = 0; ox < g.wo; ++ox) s[ox * g.stride] += k * d[ox];
              }
            }
          pm.unpad_add(dpadded.data(), x.get()->grad_buffer().data() + (b * channels + c) * in_plane);
        }
      }
    }
  });
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (ws[1] != xs[1] || ws[2] != 1 || ws[3] != 1)
    throw ShapeError("linear: weight " + to_string(ws) + " does not accept input " + to_string(xs));
  check_bias(bias, ws[0]);
  const std::size_t cin = xs[1], cout = ws[0], plane = xs[2] * xs[3];
  Tensor<T> y({xs[0], cout, xs[2], xs[3]});
  const CMapMat<T> wm(weight.value().data(), cout, cin);
  for (std::size_t b = 0; b < xs[0]; ++b) {
    MapMat<T> ym(y.data() + b * cout * plane, cout, plane);
    ym.noalias() = wm * CMapMat<T>(x.value().data() + b * cin * plane, cin, plane);
  }
  add_bias(y, bias);
  return make_result<T>(std::move(y), {x, weight, bias}, [cin, cout, plane](Node<T>& self) {
    const Var<T>& x = self.parents[0];
    const Var<T>& w = self.parents[1];
    bias_backward(self, self.parents[2]);
    const CMapMat<T> wm(w.value().data(), cout, cin);
    for (std::size_t b = 0; b < x.shape()[0]; ++b) {
      const CMapMat<T> dy(self.grad.data() + b * cout * plane, cout, plane);
      if (w.requires_grad()) {
        MapMat<T> dw(w.get()->grad_buffer().data(), cout, cin);
        dw.noalias() += dy * CMapMat<T>(x.value().data() + b * cin * plane, cin, plane).transpose();
      }
      if (x.requires_grad()) {
        MapMat<T> dx(x.get()->grad_buffer().data() + b * cin * plane, cin, plane);
        dx.noalias() += wm.transpose() * dy;
      }
    }
  });
}

#define HWLAB_INSTANTIATE_CONV(T)                                                           \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const ConvOptions&); \
  template Var<T> conv_transpose2d<T>(const Var<T>&, const Var<T>&, const Var<T>&,            \
                                      const ConvOptions&);                                    \
  template Var<T> depthwise_conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&,            \
                                      const ConvOptions&);                                    \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);

HWLAB_INSTANTIATE_CONV(float)
HWLAB_INSTANTIATE_CONV(double)

}  // namespace hwlab::ad
