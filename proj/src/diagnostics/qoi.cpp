#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "hwlab/diagnostics.hpp"

namespace hwlab {

double gamma_n(const PlasmaState& state) {
  require_same_grid(state.n, state.phi);
  const Field dphi_dy = fd_deriv(state.phi, Axis::y);
  double acc = 0.0;
  for (std::size_t i = 0; i < state.n.size(); ++i) acc += state.n.values()[i] * dphi_dy.values()[i];
  const double dx = state.n.grid().dx();
  return -acc * dx * dx;
}

double gamma_c(const PlasmaState& state, const HwParams& params) {
  require_same_grid(state.n, state.phi);
  double acc = 0.0;
  for (std::size_t i = 0; i < state.n.size(); ++i) {
    const double d = state.n.values()[i] - state.phi.values()[i];
    acc += d * d;
  }
  const double dx = state.n.grid().dx();
  return params.c1 * acc * dx * dx;
}

void QoiSeries::push_back(double t, double gn, double gc) {
  if (!times.empty() && !(t > times.back())) throw std::invalid_argument("QoI times must be strictly increasing");
  times.push_back(t);
  gamma_n.push_back(gn);
  gamma_c.push_back(gc);
}

void append_qoi(QoiSeries& series, const PlasmaState& state, const HwParams& params, QoiNormalization norm) {
  double scale = 1.0;
  if (norm == QoiNormalization::domain_mean) {
    const double l = state.n.grid().length();
    scale = 1.0 / (l * l);
  }
  series.push_back(state.t, gamma_n(state) * scale, gamma_c(state, params) * scale);
}

QoiSeries qoi_series(std::span<const PlasmaState> snapshots, const HwParams& params, QoiNormalization norm) {
  QoiSeries series;
  for (const auto& s : snapshots) append_qoi(series, s, params, norm);
  return series;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw EmptyWindow("no samples");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

QoiStats temporal_stats(const QoiSeries& series, double t_lo, double t_hi) {
  std::vector<double> gn, gc;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.times[i] >= t_lo && series.times[i] <= t_hi) {
      gn.push_back(series.gamma_n[i]);
      gc.push_back(series.gamma_c[i]);
    }
  }
  if (gn.empty()) throw EmptyWindow("no QoI samples in the requested time window");
  return {mean_std(gn), mean_std(gc), gn.size()};
}

namespace {

void set_full_precision(std::ostream& os) { os << std::setprecision(std::numeric_limits<double>::max_digits10); }

}  // namespace

void write_csv(std::ostream& os, const QoiSeries& series) {
  set_full_precision(os);
  os << "t,gamma_n,gamma_c\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    os << series.times[i] << ',' << series.gamma_n[i] << ',' << series.gamma_c[i] << '\n';
}

void write_csv(std::ostream& os, const RadialSpectrum& spectrum) {
  set_full_precision(os);
  os << "k,power,modes\n";
  for (std::size_t i = 0; i < spectrum.k_bins.size(); ++i)
    os << spectrum.k_bins[i] << ',' << spectrum.power[i] << ',' << spectrum.mode_count[i] << '\n';
}

void write_csv(std::ostream& os, const FrequencySpectrum& spectrum) {
  set_full_precision(os);
  os << "frequency,magnitude\n";
  for (std::size_t i = 0; i < spectrum.frequency.size(); ++i)
    os << spectrum.frequency[i] << ',' << spectrum.magnitude[i] << '\n';
}

}  // namespace hwlab
