#include <cmath>

#include "hwlab/hwsim.hpp"

namespace hwlab {

void HwParams::validate() const {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(c1) || !positive(k0) || !positive(kappa) || !positive(c_pb))
    throw std::invalid_argument("HW parameters c1, k0, kappa, c_pb must be positive");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("hyperdiffusion nu must be >= 0");
  if (hyper_order < 1) throw std::invalid_argument("hyperdiffusion order must be >= 1");
}

HwParams sample_params(std::mt19937_64& rng, const ParamRanges& r) {
  HwParams p;
  p.c1 = std::uniform_real_distribution<double>(r.c1_lo, r.c1_hi)(rng);
  p.k0 = std::uniform_real_distribution<double>(r.k0_lo, r.k0_hi)(rng);
  p.kappa = std::uniform_real_distribution<double>(r.kappa_lo, r.kappa_hi)(rng);
  p.c_pb = std::uniform_real_distribution<double>(r.c_pb_lo, r.c_pb_hi)(rng);
  return p;
}

void SimConfig::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");
  if (!(grf_amplitude > 0.0)) throw std::invalid_argument("grf_amplitude must be positive");
  if (grf_corr_length && !(*grf_corr_length > 0.0))
    throw std::invalid_argument("grf_corr_length must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(root, h);
}

NumericalBlowUp::NumericalBlowUp(std::size_t step, double max_abs_omega)
    : std::runtime_error("numerical blow-up at step " + std::to_string(step) +
                         " (max |Omega| = " + std::to_string(max_abs_omega) + ")"),
      step_(step),
      max_abs_omega_(max_abs_omega) {}

}  // namespace hwlab
