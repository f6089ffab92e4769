#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwlab/dataset.hpp"
#include "hwlab/ficonv.hpp"
#include "hwlab/learn.hpp"

namespace hwlab::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kOk = 0, kOther = 1, kConfigError = 2, kDataError = 3, kBlowUp = 4 };

struct SimulateSection {
  std::size_t instances = 6;
  std::size_t grid_n = 32;
  double dt = 0.005;
  std::size_t n_steps = 22000;
  std::size_t snapshot_every = 10;
  bool sample_params = true;
  HwParams params;
  ParamRanges ranges;
  double grf_amplitude = 0.01;
  double grf_corr_length = 0.0;  // 0 selects 4 grid spacings
};

struct DatasetSection {
  std::string source = "sim";
  double train_fraction = 0.67;
  double t_cut = 100.0;
  double max_dt = 1.0;
  std::size_t pairs_per_instance = 300;
  double test_max_dt = 0.2;
  std::size_t test_pairs_per_instance = 64;
  std::string reduced = "none";
};

struct TrainSection {
  std::string dataset = "data/train.hwds";
  std::string test_dataset;
  double lr = 3e-4;
  std::size_t batch_size = 8;
  std::size_t steps = 2000;
  double weight_decay = 0.01;
};

struct EvalSection {
  std::string checkpoint = "model/model.ficw";
  std::string dataset = "data/test.hwds";
};

struct RolloutSection {
  std::string checkpoint = "model/model.ficw";
  std::string trajectory = "sim/traj_000.hwtj";
  double start_time = 100.0;
  double t_a = 0.1;
  std::size_t n_steps = 100;
};

struct DiagnoseSection {
  std::string trajectory = "sim/traj_000.hwtj";
  double t_lo = 100.0;
  double t_hi = 1e300;
  double low_k_lo = 1.0;   // in units of k0
  double low_k_hi = 6.0;
  double high_k_lo = 20.0;
  double high_k_hi = 0.0;  // 0 selects the Nyquist shell
};

struct InvertSection {
  std::string checkpoint = "model/model.ficw";
  std::string dataset = "data/test.hwds";
  /// Index of the parameter set (in order of appearance) to invert.
  std::size_t instance = 0;
  double lr = 0.01;
  std::size_t steps = 400;
  std::size_t n_pairs = 32;
  bool sample_init = true;
  HwParams init_guess;
  double weight_decay = 0.0;
};

struct AppConfig {
  SimulateSection simulate;
  DatasetSection dataset;
  FiConvConfig model;
  TrainSection train;
  EvalSection eval;
  RolloutSection rollout;
  DiagnoseSection diagnose;
  InvertSection invert;
};

/// Parses an INI file (may be empty) and applies `section.key=value`
/// overrides in order. Unknown keys and malformed values raise ConfigError.
AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);
AppConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides);

/// Every key with its effective value, in INI form.
std::string render_config(const AppConfig& config);

struct RunOptions {
  std::string command;
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
};

/// Runs one command and maps failures to exit codes. Diagnostics go to `log`.
int run(const RunOptions& options, std::ostream& log);

/// Argument parsing plus run(); the tool's main forwards here.
int main_entry(int argc, char** argv);

}  // namespace hwlab::app
