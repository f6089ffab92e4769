#include <algorithm>
#include <cmath>
#include <numeric>

#include "hwlab/learn.hpp"

namespace hwlab {

TrainingDiverged::TrainingDiverged(std::size_t step, double loss)
    : std::runtime_error("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(loss) + ")"),
      step_(step) {}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("train: lr must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
}

namespace {

ad::AdamWConfig adamw_config(const TrainConfig& c) {
  ad::AdamWConfig a;
  a.weight_decay = c.weight_decay;
  // With lr = 0 the optimizer is never stepped; AdamW itself requires lr > 0.
  a.lr = c.lr > 0.0 ? c.lr : 1.0;
  return a;
}

}  // namespace

template <class T>
TrainResult train(Model<T>& model, std::span<const SnapshotPair> pairs, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.empty()) throw DataError("train: empty dataset");
  model.set_trainable(true);
  ad::AdamW<T> opt(model.params(), adamw_config(config));
  std::mt19937_64 rng(config.seed);

  const std::size_t batch = std::min(config.batch_size, pairs.size());
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::size_t epoch = 0;
  double epoch_sum = 0.0;
  std::size_t epoch_steps = 0;

  TrainResult result;
  for (std::size_t step = 0; step < config.steps; ++step) {
    if (cursor + batch > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    std::vector<const SnapshotPair*> chosen;
    for (std::size_t i = 0; i < batch; ++i) chosen.push_back(&pairs[order[cursor + i]]);
    cursor += batch;

    const auto b = make_batch<T>(chosen);
    const auto scalars = scalar_constants<T>(b.dt, b.params);
    const auto input = assemble_input(b.fields, scalars, model.config());
    const auto pred = hard_constraint(model.forward(input), scalars.dt, b.fields);
    const auto loss = hw_loss(pred, b.targets, config.loss_weights);
    const double value = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(value)) throw TrainingDiverged(step, value);

    if (config.lr > 0.0) {
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
    }
    result.step_losses.push_back({step, value});
    epoch_sum += value;
    ++epoch_steps;
    if (cursor + batch > order.size()) {
      result.epoch_losses.push_back({epoch, epoch_sum / static_cast<double>(epoch_steps)});
      if (on_epoch) on_epoch(epoch, step + 1);
      ++epoch;
      epoch_sum = 0.0;
      epoch_steps = 0;
    }
  }
  return result;
}

template <class T>
EvalResult evaluate(const Model<T>& model, std::span<const SnapshotPair> pairs, std::size_t batch_size) {
  if (pairs.empty()) throw DataError("evaluate: no pairs");
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be positive");
  EvalResult r;
  const std::size_t n = model.config().grid_n, plane = n * n;
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, pairs.size() - start);
    std::vector<const SnapshotPair*> chosen;
    for (std::size_t i = 0; i < count; ++i) chosen.push_back(&pairs[start + i]);
    const auto b = make_batch<T>(chosen);
    const auto scalars = scalar_constants<T>(b.dt, b.params);
    const auto raw = model.forward(assemble_input(b.fields, scalars, model.config()));
    for (std::size_t i = 0; i < count; ++i) {
      const SnapshotPair& p = *chosen[i];
      ad::Tensor<T> one({1, 2, n, n});
      std::copy(raw.value().data() + i * 2 * plane, raw.value().data() + (i + 1) * 2 * plane, one.data());
      const auto [po, pn] = apply_hard_constraint(one, p.dt_i, p.input);
      r.pair_mse.push_back(hw_loss(po, pn, p.target_omega, p.target_n));
      r.pair_persistence_mse.push_back(hw_loss(p.input.omega, p.input.n, p.target_omega, p.target_n));
    }
  }
  const double m = static_cast<double>(r.pair_mse.size());
  r.mse = std::accumulate(r.pair_mse.begin(), r.pair_mse.end(), 0.0) / m;
  r.persistence_mse = std::accumulate(r.pair_persistence_mse.begin(), r.pair_persistence_mse.end(), 0.0) / m;
  return r;
}

template TrainResult train<float>(Model<float>&, std::span<const SnapshotPair>, const TrainConfig&,
                                  const EpochCallback&);
template TrainResult train<double>(Model<double>&, std::span<const SnapshotPair>, const TrainConfig&,
                                   const EpochCallback&);
template EvalResult evaluate<float>(const Model<float>&, std::span<const SnapshotPair>, std::size_t);
template EvalResult evaluate<double>(const Model<double>&, std::span<const SnapshotPair>, std::size_t);

}  // namespace hwlab
