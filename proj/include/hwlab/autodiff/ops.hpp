#pragma once

#include <vector>

#include "hwlab/autodiff/graph.hpp"

namespace hwlab::ad {

enum class PaddingMode { circular, zero, reflect };

struct ConvOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
  PaddingMode mode = PaddingMode::circular;
};

// Convolution-family ops. Weights follow the usual layouts:
//   conv2d            weight [Cout, Cin, kh, kw]
//   conv_transpose2d  weight [Cin, Cout, kh, kw]
//   depthwise_conv2d  weight [C, 1, kh, kw]
//   linear            weight [Cout, Cin, 1, 1]   (per-pixel channel mixing)
// Biases are [1, C, 1, 1] and may be empty Vars.

/// Cross-correlation over a padded input.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt);

/// Adjoint of conv2d with the same weight and options; the output extent is
/// the input extent that conv2d would map onto x's extent.
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt);

template <class T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, const ConvOptions& opt);

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

/// Normalizes over channels at each pixel, then applies gamma/beta ([1,C,1,1]).
template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps = 1e-6);

/// Global response normalization: with G_c the spatial L2 norm of channel c
/// and N_c = G_c / (mean_c G + eps), out = gamma * (x * N) + beta + x.
template <class T>
Var<T> grn(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, double eps = 1e-6);

/// Exact (erf) GELU.
template <class T>
Var<T> gelu(const Var<T>& x);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> scale(const Var<T>& x, double s);

/// x[b, c, h, w] * s[b or 0, 0, 0, 0]; s has shape [B,1,1,1] or [1,1,1,1].
template <class T>
Var<T> mul_batch_scalar(const Var<T>& x, const Var<T>& s);

/// Broadcasts s ([B,1,1,1] or [1,1,1,1]) to a [batch,1,height,width] plane.
template <class T>
Var<T> broadcast_plane(const Var<T>& s, std::size_t batch, std::size_t height, std::size_t width);

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);
template <class T>
Var<T> slice_channels(const Var<T>& x, std::size_t first, std::size_t count);

/// Mean of squares over all elements, as a [1,1,1,1] tensor.
template <class T>
Var<T> mean_square(const Var<T>& x);
/// Sum over all elements, as a [1,1,1,1] tensor.
template <class T>
Var<T> sum(const Var<T>& x);

}  // namespace hwlab::ad
