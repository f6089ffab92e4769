#include <algorithm>
#include <cmath>
#include <numeric>

#include "hwlab/learn.hpp"

namespace hwlab {

void InverseConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("invert: lr must be >= 0");
  if (steps == 0) throw std::invalid_argument("invert: steps must be positive");
  if (n_pairs == 0) throw std::invalid_argument("invert: n_pairs must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("invert: weight_decay must be >= 0");
}

InversionDiverged::InversionDiverged(std::size_t step, InverseResult partial)
    : std::runtime_error("inversion diverged at step " + std::to_string(step)), partial_(std::move(partial)) {}

namespace {

/// Disables weight gradients for the lifetime of the guard.
template <class T>
class FrozenWeights {
 public:
  explicit FrozenWeights(const Model<T>& model) : params_(model.params()) {
    for (auto& p : params_) {
      was_.push_back(p.requires_grad());
      p.set_requires_grad(false);
    }
  }
  ~FrozenWeights() {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i].set_requires_grad(was_[i]);
  }
  FrozenWeights(const FrozenWeights&) = delete;
  FrozenWeights& operator=(const FrozenWeights&) = delete;

 private:
  std::vector<ad::Var<T>> params_;
  std::vector<bool> was_;
};

template <class T>
ad::Var<T> scalar_param(double v) {
  return ad::parameter(ad::Tensor<T>({1, 1, 1, 1}, static_cast<T>(v)));
}

/// Loss at the current values of the four scalar Vars; populates their grads.
template <class T>
double loss_with_grads(const Model<T>& model, const PairBatch<T>& batch, const ad::Var<T>& dt,
                       const std::array<ad::Var<T>, 4>& vars) {
  const ScalarInputs<T> scalars{dt, vars[0], vars[1], vars[2], vars[3]};
  const auto input = assemble_input(batch.fields, scalars, model.config());
  const auto pred = hard_constraint(model.forward(input), dt, batch.fields);
  const auto loss = hw_loss(pred, batch.targets);
  for (auto v : vars) v.zero_grad();
  ad::backward(loss);
  return static_cast<double>(loss.value()[0]);
}

template <class T>
ad::Var<T> dt_constant(const std::vector<double>& dt) {
  ad::Tensor<T> t({dt.size(), 1, 1, 1});
  for (std::size_t i = 0; i < dt.size(); ++i) t[i] = static_cast<T>(dt[i]);
  return ad::constant(std::move(t));
}

}  // namespace

template <class T>
ParamGradient param_loss_and_grad(const Model<T>& model, std::span<const SnapshotPair* const> pairs,
                                  const HwParams& guess) {
  FrozenWeights<T> frozen(model);
  const auto batch = make_batch<T>(pairs);
  const auto g = param_vector(guess);
  const std::array<ad::Var<T>, 4> vars{scalar_param<T>(g[0]), scalar_param<T>(g[1]), scalar_param<T>(g[2]),
                                       scalar_param<T>(g[3])};
  ParamGradient out;
  out.loss = loss_with_grads(model, batch, dt_constant<T>(batch.dt), vars);
  for (std::size_t k = 0; k < 4; ++k) out.grad[k] = static_cast<double>(vars[k].grad()[0]);
  return out;
}

template <class T>
InverseResult invert(const Model<T>& model, std::span<const SnapshotPair> pairs, const InverseConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("invert: no pairs");
  FrozenWeights<T> frozen(model);

  InverseResult result;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(config.n_pairs, pairs.size()));
  result.pair_indices = order;

  std::vector<const SnapshotPair*> chosen;
  for (std::size_t i : order) chosen.push_back(&pairs[i]);
  const auto batch = make_batch<T>(chosen);
  const auto dt = dt_constant<T>(batch.dt);

  const auto g = param_vector(config.init_guess);
  const std::array<ad::Var<T>, 4> vars{scalar_param<T>(g[0]), scalar_param<T>(g[1]), scalar_param<T>(g[2]),
                                       scalar_param<T>(g[3])};
  ad::AdamWConfig ac;
  ac.lr = config.lr > 0.0 ? config.lr : 1.0;
  ac.weight_decay = config.weight_decay;
  ad::AdamW<T> opt(std::vector<ad::Var<T>>(vars.begin(), vars.end()), ac);

  auto current = [&] {
    HwParams p = config.init_guess;
    set_param_vector(p, {static_cast<double>(vars[0].value()[0]), static_cast<double>(vars[1].value()[0]),
                         static_cast<double>(vars[2].value()[0]), static_cast<double>(vars[3].value()[0])});
    return p;
  };

  for (std::size_t step = 0; step <= config.steps; ++step) {
    const double loss = loss_with_grads(model, batch, dt, vars);
    result.loss_trace.push_back(loss);
    result.param_trace.push_back(current());
    if (!std::isfinite(loss)) {
      result.estimate = result.param_trace.back();
      throw InversionDiverged(step, std::move(result));
    }
    if (step < config.steps && config.lr > 0.0) opt.step();
  }
  result.estimate = result.param_trace.back();
  return result;
}

template ParamGradient param_loss_and_grad<float>(const Model<float>&, std::span<const SnapshotPair* const>,
                                                  const HwParams&);
template ParamGradient param_loss_and_grad<double>(const Model<double>&, std::span<const SnapshotPair* const>,
                                                   const HwParams&);
template InverseResult invert<float>(const Model<float>&, std::span<const SnapshotPair>, const InverseConfig&);
template InverseResult invert<double>(const Model<double>&, std::span<const SnapshotPair>, const InverseConfig&);

}  // namespace hwlab
