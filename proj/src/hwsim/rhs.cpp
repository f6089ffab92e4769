#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "hwlab/hwsim.hpp"

namespace hwlab {

HwStepper::HwStepper(GridPtr grid, HwParams params)
    : grid_(std::move(grid)),
      params_(params),
      spectral_(grid_),
      scratch_a_(grid_),
      scratch_b_(grid_),
      bracket_(grid_),
      dphi_dy_(grid_),
      stage_omega_(grid_),
      stage_n_(grid_),
      stage_phi_(grid_),
      d_omega_(grid_),
      d_n_(grid_),
      packed_(2 * grid_->size()) {
  if (params_.hyper_order < 1) throw std::invalid_argument("hyperdiffusion order must be >= 1");
}

// target += nu * lap^N(f)
void HwStepper::add_hyperdiffusion(const Field& f, Field& target) {
  if (params_.nu == 0.0) return;
  fd_laplacian_into(f, scratch_a_);
  for (int i = 1; i < params_.hyper_order; ++i) {
    fd_laplacian_into(scratch_a_, scratch_b_);
    std::swap(scratch_a_, scratch_b_);
  }
  auto t = target.values();
  const auto h = scratch_a_.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += params_.nu * h[i];
}

void HwStepper::rhs(const Field& omega, const Field& n, const Field& phi, Field& d_omega, Field& d_n) {
  const double c1 = params_.c1;
  const double cpb = params_.c_pb;
  const double kappa = params_.kappa;
  const auto o = omega.values();
  const auto nv = n.values();
  const auto p = phi.values();
  auto dO = d_omega.values();
  auto dN = d_n.values();
  const std::size_t m = o.size();

  arakawa_bracket_into(phi, omega, bracket_);
  for (std::size_t i = 0; i < m; ++i) dO[i] = c1 * (p[i] - nv[i]) - cpb * bracket_.values()[i];

  arakawa_bracket_into(phi, n, bracket_);
  fd_deriv_into(phi, Axis::y, dphi_dy_);
  for (std::size_t i = 0; i < m; ++i)
    dN[i] = c1 * (p[i] - nv[i]) - cpb * bracket_.values()[i] - kappa * dphi_dy_.values()[i];

  if (params_.placement == HyperdiffusionPlacement::self) {
    add_hyperdiffusion(omega, d_omega);
    add_hyperdiffusion(n, d_n);
  } else {
    add_hyperdiffusion(n, d_omega);
    add_hyperdiffusion(omega, d_n);
  }
}

void HwStepper::step(PlasmaState& state, double dt, std::size_t step_index) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const std::size_t m = grid_->size();
  auto pack = [m](const Field& a, const Field& b, std::span<double> out) {
    std::memcpy(out.data(), a.values().data(), m * sizeof(double));
    std::memcpy(out.data() + m, b.values().data(), m * sizeof(double));
  };
  pack(state.omega, state.n, packed_);
  rk4_advance(packed_, dt, [&](std::span<const double> u, std::span<double> du) {
    std::memcpy(stage_omega_.values().data(), u.data(), m * sizeof(double));
    std::memcpy(stage_n_.values().data(), u.data() + m, m * sizeof(double));
    spectral_.poisson_solve(stage_omega_, stage_phi_);
    rhs(stage_omega_, stage_n_, stage_phi_, d_omega_, d_n_);
    pack(d_omega_, d_n_, du);
  });
  std::memcpy(state.omega.values().data(), packed_.data(), m * sizeof(double));
  std::memcpy(state.n.values().data(), packed_.data() + m, m * sizeof(double));
  spectral_.poisson_solve(state.omega, state.phi);
  state.t += dt;

  bool finite = true;
  for (double v : packed_) finite = finite && std::isfinite(v);
  const double max_omega = state.omega.max_abs();
  if (!finite || !(max_omega <= kBlowUpThreshold))
    throw NumericalBlowUp(step_index, finite ? max_omega : std::numeric_limits<double>::infinity());
}

Tendency hw_rhs(const PlasmaState& state, const HwParams& params) {
  HwStepper stepper(state.grid(), params);
  Tendency t{Field(state.grid()), Field(state.grid())};
  stepper.rhs(state.omega, state.n, state.phi, t.d_omega, t.d_n);
  return t;
}

PlasmaState rk4_step(const PlasmaState& state, const HwParams& params, double dt) {
  HwStepper stepper(state.grid(), params);
  PlasmaState next = state;
  stepper.step(next, dt);
  return next;
}

}  // namespace hwlab
