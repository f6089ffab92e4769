#include "hwlab/learn.hpp"

namespace hwlab {

void RolloutConfig::validate() const {
  if (!(t_a > 0.0 && t_a <= 1.0)) throw std::invalid_argument("rollout: t_a must lie in (0, 1]");
}

template <class T>
std::vector<PlasmaState> rollout(const Model<T>& model, const PlasmaState& initial, const HwParams& params,
                                 const RolloutConfig& config) {
  config.validate();
  std::vector<PlasmaState> states{initial};
  SpectralWorkspace spectral(initial.grid());
  for (std::size_t step = 0; step < config.n_steps; ++step) {
    const PlasmaState& prev = states.back();
    auto [omega, dens] = predict(model, prev, config.t_a, params);
    if (!omega.all_finite() || !dens.all_finite()) throw NumericalBlowUp(step + 1, omega.max_abs());
    PlasmaState next;
    next.phi = Field(initial.grid());
    spectral.poisson_solve(omega, next.phi);
    next.omega = std::move(omega);
    next.n = std::move(dens);
    next.t = prev.t + config.t_a;
    states.push_back(std::move(next));
  }
  return states;
}

template std::vector<PlasmaState> rollout<float>(const Model<float>&, const PlasmaState&, const HwParams&,
                                                 const RolloutConfig&);
template std::vector<PlasmaState> rollout<double>(const Model<double>&, const PlasmaState&, const HwParams&,
                                                  const RolloutConfig&);

}  // namespace hwlab
