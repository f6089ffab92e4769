#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hwlab/autodiff/adamw.hpp"
#include "hwlab/dataset.hpp"
#include "hwlab/ficonv.hpp"

namespace hwlab {

struct LossWeights {
  double omega = 1.0 / kOmegaScale;
  double density = 1.0 / kDensityScale;
};

/// Weighted MSE over a batch: pred and target are [B, 2, n, n] (Omega, n);
/// squared errors are averaged over pixels and batch.
template <class T>
ad::Var<T> hw_loss(const ad::Var<T>& pred, const ad::Var<T>& target, const LossWeights& weights = {});

/// The same loss for one sample in 64-bit.
double hw_loss(const Field& pred_omega, const Field& pred_n, const Field& true_omega, const Field& true_n,
               const LossWeights& weights = {});

/// A batch of pairs converted to network precision.
template <class T>
struct PairBatch {
  ad::Var<T> fields;   // [B, 3, n, n] input Omega, phi, n
  ad::Var<T> targets;  // [B, 2, n, n] target Omega, n
  std::vector<double> dt;
  std::vector<HwParams> params;
};

template <class T>
PairBatch<T> make_batch(std::span<const SnapshotPair* const> pairs);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, double loss);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct TrainConfig {
  double lr = 3e-4;
  std::size_t batch_size = 8;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  LossWeights loss_weights;

  void validate() const;
};

struct LossRecord {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  std::vector<LossRecord> step_losses;
  /// Mean step loss over each completed pass through the data.
  std::vector<LossRecord> epoch_losses;
};

/// Called after each completed epoch with (epoch index, step count).
using EpochCallback = std::function<void(std::size_t, std::size_t)>;

/// AdamW over shuffled mini-batches; an epoch is one pass over `pairs`.
template <class T>
TrainResult train(Model<T>& model, std::span<const SnapshotPair> pairs, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
  double mse = 0.0;
  double persistence_mse = 0.0;
  std::vector<double> pair_mse;
  std::vector<double> pair_persistence_mse;
};

/// Mean loss over pairs, with the predict-the-input baseline alongside.
template <class T>
EvalResult evaluate(const Model<T>& model, std::span<const SnapshotPair> pairs, std::size_t batch_size = 8);

struct RolloutConfig {
  double t_a = 0.1;
  std::size_t n_steps = 10;

  void validate() const;
};

/// Autoregressive prediction. phi is re-solved from the predicted Omega
/// after every step. Throws NumericalBlowUp on a non-finite prediction.
template <class T>
std::vector<PlasmaState> rollout(const Model<T>& model, const PlasmaState& initial, const HwParams& params,
                                 const RolloutConfig& config);

struct InverseConfig {
  double lr = 0.01;
  std::size_t steps = 400;
  std::size_t n_pairs = 32;
  HwParams init_guess;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;

  void validate() const;
};

struct InverseResult {
  HwParams estimate;
  /// loss_trace[i] is the loss at param_trace[i]; both have steps + 1 rows
  /// and start at the initial guess.
  std::vector<double> loss_trace;
  std::vector<HwParams> param_trace;
  std::vector<std::size_t> pair_indices;
};

class InversionDiverged : public std::runtime_error {
 public:
  InversionDiverged(std::size_t step, InverseResult partial);
  const InverseResult& partial() const { return partial_; }

 private:
  InverseResult partial_;
};

struct ParamGradient {
  double loss = 0.0;
  std::array<double, 4> grad{};  // c1, k0, kappa, c_pb
};

/// Loss over `pairs` evaluated at `guess` and its gradient with respect to
/// the four scalar inputs. Weight gradients are not materialized.
template <class T>
ParamGradient param_loss_and_grad(const Model<T>& model, std::span<const SnapshotPair* const> pairs,
                                  const HwParams& guess);

/// Estimates (c1, k0, kappa, c_pb) with frozen weights. `n_pairs` pairs are
/// drawn uniformly without replacement from `pairs`.
template <class T>
InverseResult invert(const Model<T>& model, std::span<const SnapshotPair> pairs, const InverseConfig& config);

std::array<double, 4> param_vector(const HwParams& p);
void set_param_vector(HwParams& p, const std::array<double, 4>& v);

/// Mean absolute error per parameter (c1, k0, kappa, c_pb).
std::array<double, 4> mae(std::span<const HwParams> truth, std::span<const HwParams> pred);

}  // namespace hwlab
