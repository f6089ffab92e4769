#include <cmath>

#include "hwlab/learn.hpp"

namespace hwlab {

template <class T>
ad::Var<T> hw_loss(const ad::Var<T>& pred, const ad::Var<T>& target, const LossWeights& weights) {
  if (pred.shape() != target.shape() || pred.shape()[1] != 2)
    throw ad::ShapeError("hw_loss: pred " + ad::to_string(pred.shape()) + " vs target " + ad::to_string(target.shape()));
  const auto diff = ad::sub(pred, target);
  const auto omega = ad::scale(ad::mean_square(ad::slice_channels(diff, 0, 1)), weights.omega);
  const auto dens = ad::scale(ad::mean_square(ad::slice_channels(diff, 1, 1)), weights.density);
  return ad::add(omega, dens);
}

double hw_loss(const Field& pred_omega, const Field& pred_n, const Field& true_omega, const Field& true_n,
               const LossWeights& weights) {
  require_same_grid(pred_omega, true_omega);
  require_same_grid(pred_n, true_n);
  require_same_grid(pred_omega, pred_n);
  const auto po = pred_omega.values(), pn = pred_n.values(), to = true_omega.values(), tn = true_n.values();
  double so = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < po.size(); ++i) {
    so += (po[i] - to[i]) * (po[i] - to[i]);
    sn += (pn[i] - tn[i]) * (pn[i] - tn[i]);
  }
  const double m = static_cast<double>(po.size());
  return weights.omega * so / m + weights.density * sn / m;
}

template <class T>
PairBatch<T> make_batch(std::span<const SnapshotPair* const> pairs) {
  if (pairs.empty()) throw DataError("make_batch: no pairs");
  std::vector<const PlasmaState*> inputs;
  PairBatch<T> batch;
  for (const auto* p : pairs) {
    inputs.push_back(&p->input);
    batch.dt.push_back(p->dt_i);
    batch.params.push_back(p->params);
  }
  batch.fields = ad::constant(field_tensor<T>(inputs));
  const std::size_t n = pairs.front()->input.omega.n(), plane = n * n;
  ad::Tensor<T> targets({pairs.size(), 2, n, n});
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    const Field* f[2] = {&pairs[b]->target_omega, &pairs[b]->target_n};
    for (std::size_t c = 0; c < 2; ++c) {
      if (f[c]->n() != n) throw DataError("make_batch: pairs on different grids");
      const auto v = f[c]->values();
      T* dst = targets.data() + (b * 2 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(v[i]);
    }
  }
  batch.targets = ad::constant(std::move(targets));
  return batch;
}

std::array<double, 4> param_vector(const HwParams& p) { return {p.c1, p.k0, p.kappa, p.c_pb}; }

void set_param_vector(HwParams& p, const std::array<double, 4>& v) {
  p.c1 = v[0];
  p.k0 = v[1];
  p.kappa = v[2];
  p.c_pb = v[3];
}

std::array<double, 4> mae(std::span<const HwParams> truth, std::span<const HwParams> pred) {
  if (truth.size() != pred.size() || truth.empty())
    throw std::invalid_argument("mae: lists must have equal, non-zero length");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto a = param_vector(truth[i]), b = param_vector(pred[i]);
    for (std::size_t k = 0; k < 4; ++k) out[k] += std::abs(a[k] - b[k]);
  }
  for (auto& v : out) v /= static_cast<double>(truth.size());
  return out;
}

template ad::Var<float> hw_loss<float>(const ad::Var<float>&, const ad::Var<float>&, const LossWeights&);
template ad::Var<double> hw_loss<double>(const ad::Var<double>&, const ad::Var<double>&, const LossWeights&);
template PairBatch<float> make_batch<float>(std::span<const SnapshotPair* const>);
template PairBatch<double> make_batch<double>(std::span<const SnapshotPair* const>);

}  // namespace hwlab
