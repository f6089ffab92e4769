#include <chrono>

#include "hwlab/hwsim.hpp"

namespace hwlab {

std::vector<double> simulate(const SimConfig& config, const SnapshotSink& sink) {
  PlasmaState state = init_state(config);
  HwStepper stepper(state.grid(), config.params);
  std::vector<double> seconds;
  seconds.reserve(config.n_steps);
  sink(state);
  for (std::size_t step = 1; step <= config.n_steps; ++step) {
    const auto start = std::chrono::steady_clock::now();
    stepper.step(state, config.dt, step);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    // Recompute t from the step count so snapshot times do not accumulate round-off.
    state.t = static_cast<double>(step) * config.dt;
    if (step % config.snapshot_every == 0) sink(state);
  }
  return seconds;
}

Trajectory simulate(const SimConfig& config) {
  Trajectory traj;
  traj.params = config.params;
  traj.step_seconds = simulate(config, [&](const PlasmaState& s) { traj.snapshots.push_back(s); });
  return traj;
}

double fluctuation_energy(const PlasmaState& state) {
  const Field dx = fd_deriv(state.phi, Axis::x);
  const Field dy = fd_deriv(state.phi, Axis::y);
  double e = 0.0;
  for (std::size_t i = 0; i < state.n.size(); ++i) {
    const double a = dx.values()[i], b = dy.values()[i], c = state.n.values()[i];
    e += c * c + a * a + b * b;
  }
  return 0.5 * e / static_cast<double>(state.n.size());
}

}  // namespace hwlab
