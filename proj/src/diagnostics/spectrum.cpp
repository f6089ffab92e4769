#include <fftw3.h>

#include <cmath>

#include "hwlab/diagnostics.hpp"

namespace hwlab {

FrequencySpectrum series_fft(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size()) throw std::invalid_argument("series_fft: times and values differ in length");
  const std::size_t m = values.size();
  if (m < 2) throw std::invalid_argument("series_fft needs at least two samples");
  const double step = times[1] - times[0];
  if (!(step > 0.0)) throw std::invalid_argument("series_fft: times must increase");
  for (std::size_t i = 1; i < m; ++i) {
    if (std::abs((times[i] - times[i - 1]) - step) > 1e-6 * step)
      throw std::invalid_argument("series_fft requires uniformly sampled data");
  }

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(m);

  const std::size_t bins = m / 2 + 1;
  double* in = fftw_alloc_real(m);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fft_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < m; ++i) in[i] = values[i] - mean;
  fftw_execute(plan);

  FrequencySpectrum spec;
  spec.frequency.resize(bins);
  spec.magnitude.resize(bins);
  for (std::size_t j = 0; j < bins; ++j) {
    spec.frequency[j] = static_cast<double>(j) / (static_cast<double>(m) * step);
    spec.magnitude[j] = std::hypot(out[j][0], out[j][1]);
  }
  {
    std::lock_guard lock(fft_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return spec;
}

double RadialSpectrum::total_power(std::size_t first_shell) const {
  double total = 0.0;
  for (std::size_t s = first_shell; s < power.size(); ++s) total += power[s] * static_cast<double>(mode_count[s]);
  return total;
}

RadialSpectrum radial_power_spectrum(const Field& f) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.n();
  const Spectrum2d spec = fft2(f);
  const double norm = 1.0 / (static_cast<double>(grid.size()) * static_cast<double>(grid.size()));
  const double k0 = grid.k0();
  const double kmax = std::sqrt(2.0) * static_cast<double>(n / 2) * k0;
  const auto shells = static_cast<std::size_t>(std::lround(kmax / k0)) + 1;

  RadialSpectrum out;
  out.k_bins.resize(shells);
  out.power.assign(shells, 0.0);
  out.mode_count.assign(shells, 0);
  for (std::size_t s = 0; s < shells; ++s) out.k_bins[s] = static_cast<double>(s) * k0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double k = std::hypot(grid.kx()[ix], grid.ky()[iy]);
      const auto s = static_cast<std::size_t>(std::lround(k / k0));
      out.power[s] += std::norm(spec[iy * n + ix]) * norm;
      ++out.mode_count[s];
    }
  }
  for (std::size_t s = 0; s < shells; ++s)
    if (out.mode_count[s] > 0) out.power[s] /= static_cast<double>(out.mode_count[s]);
  return out;
}

RadialSpectrum grad_phi_spectrum(const PlasmaState& state) {
  const Field gx = fd_deriv(state.phi, Axis::x);
  const Field gy = fd_deriv(state.phi, Axis::y);
  Field g2(state.phi.grid_ptr());
  for (std::size_t i = 0; i < g2.size(); ++i) {
    const double a = gx.values()[i], b = gy.values()[i];
    g2.values()[i] = a * a + b * b;
  }
  return radial_power_spectrum(g2);
}

double fit_loglog_slope(const RadialSpectrum& spectrum, double k_lo, double k_hi) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < spectrum.k_bins.size(); ++i) {
    const double k = spectrum.k_bins[i];
    if (k < k_lo || k > k_hi || spectrum.mode_count[i] == 0) continue;
    if (!(k > 0.0) || !(spectrum.power[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: non-positive wavenumber or power in range");
    lx.push_back(std::log(k));
    ly.push_back(std::log(spectrum.power[i]));
  }
  if (lx.size() < 3) throw std::invalid_argument("fit_loglog_slope needs at least three bins in range");
  const auto m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace hwlab
