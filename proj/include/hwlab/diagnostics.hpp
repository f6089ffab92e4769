#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "hwlab/hwsim.hpp"

namespace hwlab {

/// Particle flux -integral(n dphi/dy) over the domain (Riemann sum x dx^2,
/// FD derivative).
double gamma_n(const PlasmaState& state);

/// Resistive dissipation c1 * integral((n - phi)^2) over the domain.
double gamma_c(const PlasmaState& state, const HwParams& params);

/// `integral` reports the domain integrals above; `domain_mean` divides them
/// by the domain area L^2, which is the normalization of the published
/// reference flux levels.
enum class QoiNormalization { integral, domain_mean };

struct QoiSeries {
  std::vector<double> times;
  std::vector<double> gamma_n;
  std::vector<double> gamma_c;

  std::size_t size() const { return times.size(); }
  void push_back(double t, double gn, double gc);
};

QoiSeries qoi_series(std::span<const PlasmaState> snapshots, const HwParams& params,
                     QoiNormalization norm = QoiNormalization::domain_mean);

/// Incremental variant for streaming simulations.
void append_qoi(QoiSeries& series, const PlasmaState& state, const HwParams& params,
                QoiNormalization norm = QoiNormalization::domain_mean);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct QoiStats {
  MeanStd gamma_n;
  MeanStd gamma_c;
  std::size_t samples = 0;
};

class EmptyWindow : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sample mean and population standard deviation over t in [t_lo, t_hi].
QoiStats temporal_stats(const QoiSeries& series, double t_lo, double t_hi);
MeanStd mean_std(std::span<const double> values);

struct FrequencySpectrum {
  std::vector<double> frequency;  ///< cycles per unit time
  std::vector<double> magnitude;  ///< |DFT| of the mean-removed samples
};

/// Magnitude spectrum of a uniformly sampled series (bins 0..m/2).
FrequencySpectrum series_fft(std::span<const double> times, std::span<const double> values);

struct RadialSpectrum {
  std::vector<double> k_bins;              ///< shell centres s * k0
  std::vector<double> power;               ///< mean |g_k|^2 / n^4 per mode in the shell
  std::vector<std::size_t> mode_count;     ///< modes falling in each shell

  /// Sum of shell power over shells s >= first_shell, weighted by mode count.
  double total_power(std::size_t first_shell = 0) const;
};

/// Spectrum of |grad phi|^2 binned into shells of width k0 centred at s * k0.
RadialSpectrum grad_phi_spectrum(const PlasmaState& state);
RadialSpectrum radial_power_spectrum(const Field& f);

/// Least-squares slope of log(power) against log(k) over bins in [k_lo, k_hi].
double fit_loglog_slope(const RadialSpectrum& spectrum, double k_lo, double k_hi);

void write_csv(std::ostream& os, const QoiSeries& series);
void write_csv(std::ostream& os, const RadialSpectrum& spectrum);
void write_csv(std::ostream& os, const FrequencySpectrum& spectrum);

}  // namespace hwlab
