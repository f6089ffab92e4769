#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hwlab/autodiff/checkpoint.hpp"
#include "hwlab/autodiff/graph.hpp"
#include "hwlab/autodiff/ops.hpp"
#include "hwlab/hwsim.hpp"

namespace hwlab {

enum class Precision { f32, f64 };

struct FiConvConfig {
  std::size_t grid_n = 32;
  std::size_t base_width = 16;
  /// ConvNeXt-V2 blocks per encoder level.
  std::array<std::size_t, 4> blocks_per_level{1, 1, 1, 1};
  /// Blocks at the coarsest resolution, after the fourth downsampling.
  std::size_t bottleneck_blocks = 1;
  /// Multipliers for the scalar channels: dt_i, c1, k0, kappa, c_pb.
  std::array<double, 5> param_scaling{1.0, 1.0, 1.0, 1.0, 1.0};
  Precision precision = Precision::f32;

  void validate() const;
  std::size_t width(std::size_t level) const { return base_width << level; }

  /// key = value lines; from_text reads them back.
  std::string to_text() const;
  static FiConvConfig from_text(const std::string& text);
};

inline constexpr std::size_t kInputChannels = 8;
inline constexpr std::size_t kOutputChannels = 2;
inline constexpr double kOmegaScale = 100.0;
inline constexpr double kDensityScale = 20.0;

/// Closed-form parameter count for a configuration.
std::size_t count_params(const FiConvConfig& config);

/// The FI-Conv U-Net. Parameters are stored by name in creation order.
template <class T>
class Model {
 public:
  Model(const FiConvConfig& config, std::uint64_t seed);

  const FiConvConfig& config() const { return config_; }
  const std::vector<std::pair<std::string, ad::Var<T>>>& named_params() const { return params_; }
  std::vector<ad::Var<T>> params() const;
  std::size_t param_count() const;

  /// Input [B, 8, n, n] -> raw output [B, 2, n, n].
  ad::Var<T> forward(const ad::Var<T>& input) const;

  /// Enables or disables gradient tracking on every weight.
  void set_trainable(bool on);
  /// FNV-1a over the raw bytes of every weight, in creation order.
  std::uint64_t checksum() const;

  ad::Checkpoint<T> to_checkpoint() const;
  void load_weights(const ad::Checkpoint<T>& checkpoint);

  template <class U>
  Model<U> cast() const;

 private:
  struct Block {
    ad::Var<T> dw_w, dw_b, ln_g, ln_b, fc1_w, fc1_b, grn_g, grn_b, fc2_w, fc2_b;
  };
  struct Conv {
    ad::Var<T> w, b;
  };

  ad::Var<T> add_param(const std::string& name, ad::Shape shape, std::mt19937_64& rng, int kind);
  Block make_block(const std::string& prefix, std::size_t channels, std::mt19937_64& rng);
  Conv make_conv(const std::string& prefix, ad::Shape shape, std::mt19937_64& rng);
  ad::Var<T> block_forward(const Block& b, const ad::Var<T>& x) const;

  FiConvConfig config_;
  std::vector<std::pair<std::string, ad::Var<T>>> params_;
  Conv stem_;
  std::array<std::vector<Block>, 4> enc_;
  std::array<Conv, 4> down_;
  std::vector<Block> bottleneck_;
  std::array<Conv, 4> up_, mix_;
  Conv head_;
};

template <class T>
void save_model(const Model<T>& model, const std::filesystem::path& path);
/// Loads a checkpoint written by save_model with the same precision.
template <class T>
Model<T> load_model(const std::filesystem::path& path);

/// Scalar inputs as graph nodes, each [B,1,1,1] or [1,1,1,1].
template <class T>
struct ScalarInputs {
  ad::Var<T> dt, c1, k0, kappa, c_pb;
};

template <class T>
ScalarInputs<T> scalar_constants(std::span<const double> dt, std::span<const HwParams> params);

/// Packs Omega, phi, n of each state into a [B, 3, n, n] tensor.
template <class T>
ad::Tensor<T> field_tensor(std::span<const PlasmaState* const> states);

/// Concatenates field channels with broadcast, scaled scalar channels.
template <class T>
ad::Var<T> assemble_input(const ad::Var<T>& fields, const ScalarInputs<T>& scalars, const FiConvConfig& config);

/// Single-sample input tensor [1, 8, n, n]. Throws if dt_i is outside [0, 1].
template <class T>
ad::Tensor<T> assemble_input(const PlasmaState& state, double dt_i, const HwParams& params,
                             const FiConvConfig& config);

/// Differentiable hard constraint on a batch: returns [B, 2, n, n] with
/// Omega = dt*raw_Omega*100 + Omega_in and n = dt*raw_n*20 + n_in, where
/// `fields` holds the input Omega, phi, n channels.
template <class T>
ad::Var<T> hard_constraint(const ad::Var<T>& raw, const ad::Var<T>& dt, const ad::Var<T>& fields);

/// Field-level hard constraint for one sample, evaluated in 64-bit.
template <class T>
std::pair<Field, Field> apply_hard_constraint(const ad::Tensor<T>& raw, double dt_i, const PlasmaState& input);

template <class T>
std::pair<Field, Field> predict(const Model<T>& model, const PlasmaState& state, double dt_i, const HwParams& params);

}  // namespace hwlab
