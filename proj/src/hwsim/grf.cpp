#include <cmath>

#include "hwlab/hwsim.hpp"

namespace hwlab {

Field gaussian_random_field(const GridPtr& grid, std::uint64_t seed, double amplitude, double corr_length) {
  if (!(amplitude > 0.0) || !(corr_length > 0.0))
    throw std::invalid_argument("GRF amplitude and correlation length must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Field noise(grid);
  for (double& v : noise.values()) v = normal(rng);

  const double half_l2 = 0.5 * corr_length * corr_length;
  SpectralWorkspace ws(grid);
  Field out(grid);
  ws.apply_filter(noise, out, [half_l2](double kx, double ky) {
    const double k2 = kx * kx + ky * ky;
    return k2 == 0.0 ? 0.0 : std::exp(-k2 * half_l2);
  });

  double sq = 0.0;
  for (double v : out.values()) sq += v * v;
  const double rms = std::sqrt(sq / static_cast<double>(out.size()));
  if (!(rms > 0.0)) throw std::runtime_error("GRF filter removed all power; correlation length too large");
  const double s = amplitude / rms;
  for (double& v : out.values()) v *= s;
  return out;
}

PlasmaState make_state(Field omega, Field n, double t) {
  require_same_grid(omega, n);
  PlasmaState s;
  s.phi = spectral_poisson_solve(omega);
  s.omega = std::move(omega);
  s.n = std::move(n);
  s.t = t;
  return s;
}

PlasmaState init_state(const SimConfig& config) {
  config.validate();
  auto grid = make_grid(config.grid_n, config.params.k0);
  const double corr = config.corr_length(*grid);
  Field omega = gaussian_random_field(grid, derive_seed(config.seed, std::uint64_t{1}), config.grf_amplitude, corr);
  Field n = gaussian_random_field(grid, derive_seed(config.seed, std::uint64_t{2}), config.grf_amplitude, corr);
  return make_state(std::move(omega), std::move(n), 0.0);
}

}  // namespace hwlab
