#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "hwlab/numerics.hpp"

namespace hwlab {

std::mutex& fft_planner_mutex() {
  static std::mutex m;
  return m;
}

SpectralWorkspace::SpectralWorkspace(GridPtr grid) : grid_(std::move(grid)), half_(grid_->n() / 2 + 1) {
  const int n = static_cast<int>(grid_->n());
  real_ = fftw_alloc_real(grid_->size());
  spec_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(grid_->n() * half_));
  std::lock_guard lock(fft_planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c_2d(n, n, real_, reinterpret_cast<fftw_complex*>(spec_), FFTW_ESTIMATE);
  plan_backward_ = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(spec_), real_, FFTW_ESTIMATE);
}

SpectralWorkspace::~SpectralWorkspace() {
  {
    std::lock_guard lock(fft_planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
  }
  fftw_free(real_);
  fftw_free(spec_);
}

void SpectralWorkspace::forward(const Field& f) {
  if (!(f.grid() == *grid_)) throw GridMismatch("field grid does not match spectral workspace");
  std::memcpy(real_, f.values().data(), grid_->size() * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_forward_));
}

void SpectralWorkspace::backward(Field& out) {
  fftw_execute(static_cast<fftw_plan>(plan_backward_));
  const double norm = 1.0 / static_cast<double>(grid_->size());
  auto o = out.values();
  for (std::size_t i = 0; i < grid_->size(); ++i) o[i] = real_[i] * norm;
}

void SpectralWorkspace::poisson_solve(const Field& omega, Field& phi) {
  apply_filter(omega, phi, [](double kx, double ky) {
    const double k2 = kx * kx + ky * ky;
    return k2 == 0.0 ? 0.0 : -1.0 / k2;
  });
}

void SpectralWorkspace::spectral_laplacian(const Field& f, Field& out) {
  apply_filter(f, out, [](double kx, double ky) { return -(kx * kx + ky * ky); });
}

Field spectral_poisson_solve(const Field& omega) {
  SpectralWorkspace ws(omega.grid_ptr());
  Field phi(omega.grid_ptr());
  ws.poisson_solve(omega, phi);
  return phi;
}

Field spectral_laplacian(const Field& f) {
  SpectralWorkspace ws(f.grid_ptr());
  Field out(f.grid_ptr());
  ws.spectral_laplacian(f, out);
  return out;
}

Spectrum2d fft2(const Field& f) {
  const std::size_t n = f.n();
  Spectrum2d out(f.size());
  fftw_complex* in = fftw_alloc_complex(f.size());
  fftw_complex* res = fftw_alloc_complex(f.size());
  fftw_plan plan;
  {
    std::lock_guard lock(fft_planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), in, res, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    in[i][0] = f.values()[i];
    in[i][1] = 0.0;
  }
  fftw_execute(plan);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = {res[i][0], res[i][1]};
  {
    std::lock_guard lock(fft_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(res);
  return out;
}

Field ifft2(const Spectrum2d& spectrum, const GridPtr& grid) {
  const std::size_t n = grid->n();
  if (spectrum.size() != grid->size()) throw std::invalid_argument("spectrum size does not match grid");
  fftw_complex* in = fftw_alloc_complex(grid->size());
  fftw_complex* res = fftw_alloc_complex(grid->size());
  fftw_plan plan;
  {
    std::lock_guard lock(fft_planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), in, res, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < grid->size(); ++i) {
    in[i][0] = spectrum[i].real();
    in[i][1] = spectrum[i].imag();
  }
  fftw_execute(plan);
  Field out(grid);
  const double norm = 1.0 / static_cast<double>(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) out.values()[i] = res[i][0] * norm;
  {
    std::lock_guard lock(fft_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(res);
  return out;
}

}  // namespace hwlab
