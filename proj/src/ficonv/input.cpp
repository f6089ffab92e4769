#include <stdexcept>

#include "hwlab/ficonv.hpp"

namespace hwlab {

namespace {

template <class T>
ad::Var<T> batch_scalars(std::span<const double> values) {
  ad::Tensor<T> t({values.size(), 1, 1, 1});
  for (std::size_t b = 0; b < values.size(); ++b) t[b] = static_cast<T>(values[b]);
  return ad::constant(std::move(t));
}

template <class T>
ad::Var<T> param_column(std::span<const HwParams> params, double HwParams::*member) {
  std::vector<double> v;
  v.reserve(params.size());
  for (const auto& p : params) v.push_back(p.*member);
  return batch_scalars<T>(v);
}

}  // namespace

template <class T>
ScalarInputs<T> scalar_constants(std::span<const double> dt, std::span<const HwParams> params) {
  if (dt.size() != params.size()) throw std::invalid_argument("scalar_constants: dt and params differ in length");
  for (double d : dt)
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("dt_i must lie in [0, 1]");
  return {batch_scalars<T>(dt), param_column<T>(params, &HwParams::c1), param_column<T>(params, &HwParams::k0),
          param_column<T>(params, &HwParams::kappa), param_column<T>(params, &HwParams::c_pb)};
}

template <class T>
ad::Tensor<T> field_tensor(std::span<const PlasmaState* const> states) {
  if (states.empty()) throw std::invalid_argument("field_tensor: no states");
  const std::size_t n = states.front()->omega.n();
  const std::size_t plane = n * n;
  ad::Tensor<T> t({states.size(), 3, n, n});
  for (std::size_t b = 0; b < states.size(); ++b) {
    const PlasmaState& s = *states[b];
    if (s.omega.n() != n) throw ad::ShapeError("field_tensor: states on different grids");
    const Field* fields[3] = {&s.omega, &s.phi, &s.n};
    for (std::size_t c = 0; c < 3; ++c) {
      const auto v = fields[c]->values();
      T* dst = t.data() + (b * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(v[i]);
    }
  }
  return t;
}

template <class T>
ad::Var<T> assemble_input(const ad::Var<T>& fields, const ScalarInputs<T>& scalars, const FiConvConfig& config) {
  const ad::Shape s = fields.shape();
  if (s[1] != 3) throw ad::ShapeError("assemble_input: expected 3 field channels, got " + ad::to_string(s));
  const ad::Var<T>* inputs[5] = {&scalars.dt, &scalars.c1, &scalars.k0, &scalars.kappa, &scalars.c_pb};
  std::vector<ad::Var<T>> parts{fields};
  for (std::size_t k = 0; k < 5; ++k) {
    ad::Var<T> v = *inputs[k];
    if (config.param_scaling[k] != 1.0) v = ad::scale(v, config.param_scaling[k]);
    parts.push_back(ad::broadcast_plane(v, s[0], s[2], s[3]));
  }
  return ad::concat_channels(parts);
}

template <class T>
ad::Tensor<T> assemble_input(const PlasmaState& state, double dt_i, const HwParams& params,
                             const FiConvConfig& config) {
  const PlasmaState* states[1] = {&state};
  const double dts[1] = {dt_i};
  const HwParams ps[1] = {params};
  const auto fields = ad::constant(field_tensor<T>(states));
  return assemble_input(fields, scalar_constants<T>(dts, ps), config).value();
}

template <class T>
ad::Var<T> hard_constraint(const ad::Var<T>& raw, const ad::Var<T>& dt, const ad::Var<T>& fields) {
  if (raw.shape()[1] != 2 || fields.shape()[1] != 3 || raw.shape()[0] != fields.shape()[0] ||
      raw.shape()[2] != fields.shape()[2] || raw.shape()[3] != fields.shape()[3])
    throw ad::ShapeError("hard_constraint: raw " + ad::to_string(raw.shape()) + " vs fields " +
                         ad::to_string(fields.shape()));
  auto omega = ad::scale(ad::mul_batch_scalar(ad::slice_channels(raw, 0, 1), dt), kOmegaScale);
  auto dens = ad::scale(ad::mul_batch_scalar(ad::slice_channels(raw, 1, 1), dt), kDensityScale);
  omega = ad::add(omega, ad::slice_channels(fields, 0, 1));
  dens = ad::add(dens, ad::slice_channels(fields, 2, 1));
  return ad::concat_channels<T>({omega, dens});
}

template <class T>
std::pair<Field, Field> apply_hard_constraint(const ad::Tensor<T>& raw, double dt_i, const PlasmaState& input) {
  const std::size_t n = input.omega.n();
  if (raw.shape() != ad::Shape{1, 2, n, n})
    throw ad::ShapeError("apply_hard_constraint: raw " + ad::to_string(raw.shape()) + " for grid " + std::to_string(n));
  if (dt_i == 0.0) return {input.omega, input.n};
  Field omega(input.omega.grid_ptr());
  Field dens(input.n.grid_ptr());
  const std::size_t plane = n * n;
  const auto oin = input.omega.values();
  const auto nin = input.n.values();
  auto o = omega.values();
  auto d = dens.values();
  for (std::size_t i = 0; i < plane; ++i) {
    o[i] = dt_i * static_cast<double>(raw[i]) * kOmegaScale + oin[i];
    d[i] = dt_i * static_cast<double>(raw[plane + i]) * kDensityScale + nin[i];
  }
  return {std::move(omega), std::move(dens)};
}

template <class T>
std::pair<Field, Field> predict(const Model<T>& model, const PlasmaState& state, double dt_i, const HwParams& params) {
  const auto input = ad::constant(assemble_input<T>(state, dt_i, params, model.config()));
  const auto raw = model.forward(input);
  return apply_hard_constraint(raw.value(), dt_i, state);
}

#define HWLAB_INSTANTIATE_INPUT(T)                                                                          \
  template ScalarInputs<T> scalar_constants<T>(std::span<const double>, std::span<const HwParams>);         \
  template ad::Tensor<T> field_tensor<T>(std::span<const PlasmaState* const>);                              \
  template ad::Var<T> assemble_input<T>(const ad::Var<T>&, const ScalarInputs<T>&, const FiConvConfig&);    \
  template ad::Tensor<T> assemble_input<T>(const PlasmaState&, double, const HwParams&, const FiConvConfig&); \
  template ad::Var<T> hard_constraint<T>(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&);          \
  template std::pair<Field, Field> apply_hard_constraint<T>(const ad::Tensor<T>&, double, const PlasmaState&); \
  template std::pair<Field, Field> predict<T>(const Model<T>&, const PlasmaState&, double, const HwParams&);

HWLAB_INSTANTIATE_INPUT(float)
HWLAB_INSTANTIATE_INPUT(double)

}  // namespace hwlab
