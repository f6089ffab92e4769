#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hwlab/numerics.hpp"

namespace hwlab {

/// Where the hyperdiffusion terms act. `self` damps each field in its own
/// equation; `printed_swap` puts nu*lap^N(n) in the vorticity equation and
/// nu*lap^N(Omega) in the density equation.
enum class HyperdiffusionPlacement { self, printed_swap };

struct HwParams {
  double c1 = 1.0;
  double k0 = 0.6;
  double kappa = 1.0;
  double c_pb = 1.0;
  double nu = 5e-10;
  int hyper_order = 3;
  HyperdiffusionPlacement placement = HyperdiffusionPlacement::self;

  void validate() const;
};

/// Sampling box for the four varied parameters.
struct ParamRanges {
  double c1_lo = 0.9, c1_hi = 1.1;
  double k0_lo = 0.55, k0_hi = 0.65;
  double kappa_lo = 0.9, kappa_hi = 1.1;
  double c_pb_lo = 0.9, c_pb_hi = 1.0;
};

HwParams sample_params(std::mt19937_64& rng, const ParamRanges& ranges = {});

struct PlasmaState {
  Field omega;
  Field n;
  Field phi;
  double t = 0.0;

  const GridPtr& grid() const { return omega.grid_ptr(); }
  bool all_finite() const { return omega.all_finite() && n.all_finite() && phi.all_finite(); }
};

/// Builds a state from (omega, n) and solves phi spectrally.
PlasmaState make_state(Field omega, Field n, double t);

struct SimConfig {
  std::size_t grid_n = 128;
  HwParams params;
  double dt = 0.005;
  std::size_t n_steps = 40000;
  std::size_t snapshot_every = 50;
  std::uint64_t seed = 0;
  double grf_amplitude = 0.01;
  /// Gaussian envelope length; unset means 4 grid spacings.
  std::optional<double> grf_corr_length;

  void validate() const;
  double corr_length(const Grid& grid) const { return grf_corr_length.value_or(4.0 * grid.dx()); }
};

/// Zero-mean Gaussian random field: white noise filtered by
/// exp(-k^2 corr_length^2 / 2) and rescaled to the requested RMS.
Field gaussian_random_field(const GridPtr& grid, std::uint64_t seed, double amplitude, double corr_length);

/// Independent GRFs for Omega (stream 1) and n (stream 2); phi from Poisson.
PlasmaState init_state(const SimConfig& config);

struct Tendency {
  Field d_omega;
  Field d_n;
};

Tendency hw_rhs(const PlasmaState& state, const HwParams& params);

class NumericalBlowUp : public std::runtime_error {
 public:
  NumericalBlowUp(std::size_t step, double max_abs_omega);
  std::size_t step() const { return step_; }
  double max_abs_omega() const { return max_abs_omega_; }

 private:
  std::size_t step_;
  double max_abs_omega_;
};

inline constexpr double kBlowUpThreshold = 1e6;

/// Classical RK4 on a flat state vector. `rhs(u, du)` writes du/dt.
template <class Rhs>
void rk4_advance(std::vector<double>& u, double dt, Rhs&& rhs) {
  const std::size_t m = u.size();
  std::vector<double> k(m), stage(m), acc(m);
  rhs(std::span<const double>(u), std::span<double>(k));
  for (std::size_t i = 0; i < m; ++i) {
    acc[i] = k[i];
    stage[i] = u[i] + 0.5 * dt * k[i];
  }
  rhs(std::span<const double>(stage), std::span<double>(k));
  for (std::size_t i = 0; i < m; ++i) {
    acc[i] += 2.0 * k[i];
    stage[i] = u[i] + 0.5 * dt * k[i];
  }
  rhs(std::span<const double>(stage), std::span<double>(k));
  for (std::size_t i = 0; i < m; ++i) {
    acc[i] += 2.0 * k[i];
    stage[i] = u[i] + dt * k[i];
  }
  rhs(std::span<const double>(stage), std::span<double>(k));
  for (std::size_t i = 0; i < m; ++i) u[i] += dt / 6.0 * (acc[i] + k[i]);
}

/// Reusable stepper holding scratch fields and an FFT workspace for one grid.
/// Single owner.
class HwStepper {
 public:
  HwStepper(GridPtr grid, HwParams params);

  /// Advances (Omega, n) by one RK4 step, re-solving phi in every stage and
  /// after the update. Throws NumericalBlowUp on non-finite values or
  /// max|Omega| above kBlowUpThreshold.
  void step(PlasmaState& state, double dt, std::size_t step_index = 0);

  void rhs(const Field& omega, const Field& n, const Field& phi, Field& d_omega, Field& d_n);
  void solve_phi(const Field& omega, Field& phi) { spectral_.poisson_solve(omega, phi); }

  const HwParams& params() const { return params_; }

 private:
  GridPtr grid_;
  HwParams params_;
  SpectralWorkspace spectral_;
  Field scratch_a_, scratch_b_, bracket_, dphi_dy_;
  Field stage_omega_, stage_n_, stage_phi_;
  Field d_omega_, d_n_;
  std::vector<double> packed_;

  void add_hyperdiffusion(const Field& f, Field& target);
};

PlasmaState rk4_step(const PlasmaState& state, const HwParams& params, double dt);

struct Trajectory {
  HwParams params;
  std::vector<PlasmaState> snapshots;
  std::vector<double> step_seconds;
};

using SnapshotSink = std::function<void(const PlasmaState&)>;

/// Runs the solver and hands every snapshot (including the initial state) to
/// `sink`. Returns wall-clock seconds for each step.
std::vector<double> simulate(const SimConfig& config, const SnapshotSink& sink);
Trajectory simulate(const SimConfig& config);

/// 0.5 * mean(n^2 + |grad phi|^2), with FD gradients.
double fluctuation_energy(const PlasmaState& state);

/// Deterministic child seed for a named sub-stream (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace hwlab
