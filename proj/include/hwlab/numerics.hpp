#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace hwlab {

/// Square periodic domain of side L = 2*pi/k0 sampled on n x n points.
///
/// Wavenumber tables use the standard FFT ordering: index j maps to
/// j*k0 for j < n/2 and (j - n)*k0 otherwise, so the Nyquist entry is
/// -(n/2)*k0.
class Grid {
 public:
  Grid(std::size_t n, double k0);

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_; }
  double k0() const { return k0_; }
  double length() const { return length_; }
  double dx() const { return dx_; }
  std::span<const double> kx() const { return kx_; }
  std::span<const double> ky() const { return ky_; }

  bool operator==(const Grid& other) const { return n_ == other.n_ && k0_ == other.k0_; }

 private:
  std::size_t n_;
  double k0_;
  double length_;
  double dx_;
  std::vector<double> kx_;
  std::vector<double> ky_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(std::size_t n, double k0);

enum class Axis { x, y };

/// Real scalar field on a Grid. Storage is row-major with row = y and
/// column = x, i.e. value(iy, ix) lives at values[iy * n + ix].
class Field {
 public:
  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<double> values);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t n() const { return grid_->n(); }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t iy, std::size_t ix) { return values_[iy * grid_->n() + ix]; }
  double operator()(std::size_t iy, std::size_t ix) const { return values_[iy * grid_->n() + ix]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool empty() const { return values_.empty(); }
  bool all_finite() const;
  double sum() const;
  double mean() const;
  double max_abs() const;

  bool operator==(const Field& other) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Fills a field from f(x, y) evaluated at the grid nodes x = ix*dx, y = iy*dx.
template <class Fn>
Field sample_field(const GridPtr& grid, Fn&& fn) {
  Field out(grid);
  const double dx = grid->dx();
  for (std::size_t iy = 0; iy < grid->n(); ++iy)
    for (std::size_t ix = 0; ix < grid->n(); ++ix) out(iy, ix) = fn(ix * dx, iy * dx);
  return out;
}

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_same_grid(const Field& a, const Field& b);

// Second-order periodic finite differences.
Field fd_deriv(const Field& f, Axis axis);
Field fd_laplacian(const Field& f);
Field iterated_laplacian(const Field& f, int order);

// In-place variants for solver inner loops; `out` must already live on the
// same grid and must not alias the input.
void fd_deriv_into(const Field& f, Axis axis, Field& out);
void fd_laplacian_into(const Field& f, Field& out);

/// Fourier symbol of the 5-point Laplacian at wavenumber (kx, ky).
double fd_laplacian_symbol(double kx, double ky, double dx);

/// Energy- and enstrophy-conserving Arakawa Jacobian
/// J(p, q) = dp/dx dq/dy - dp/dy dq/dx.
Field arakawa_bracket(const Field& p, const Field& q);
void arakawa_bracket_into(const Field& p, const Field& q, Field& out);

using Spectrum2d = std::vector<std::complex<double>>;

/// Full complex 2-D DFT, unnormalized forward, 1/n^2-normalized inverse.
/// Layout matches Field: index ky * n + kx.
Spectrum2d fft2(const Field& f);
Field ifft2(const Spectrum2d& spectrum, const GridPtr& grid);

/// Real-to-complex spectral workspace bound to one grid. Not thread-safe;
/// use one per thread or per owner.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(GridPtr grid);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const Grid& grid() const { return *grid_; }

  /// Solves lap(phi) = omega - mean(omega) spectrally; the k = 0 mode of phi is zero.
  void poisson_solve(const Field& omega, Field& phi);
  /// Applies the continuous spectral Laplacian -(kx^2 + ky^2).
  void spectral_laplacian(const Field& f, Field& out);
  /// Multiplies the spectrum of f by filter(kx, ky) and transforms back.
  template <class Filter>
  void apply_filter(const Field& f, Field& out, Filter&& filter);

 private:
  void forward(const Field& f);
  void backward(Field& out);

  GridPtr grid_;
  std::size_t half_;
  double* real_ = nullptr;
  std::complex<double>* spec_ = nullptr;
  void* plan_forward_ = nullptr;
  void* plan_backward_ = nullptr;
};

template <class Filter>
void SpectralWorkspace::apply_filter(const Field& f, Field& out, Filter&& filter) {
  forward(f);
  const std::size_t n = grid_->n();
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < half_; ++ix)
      spec_[iy * half_ + ix] *= filter(grid_->kx()[ix], grid_->ky()[iy]);
  backward(out);
}

/// Guards FFTW plan creation and destruction, which are not re-entrant.
std::mutex& fft_planner_mutex();

Field spectral_poisson_solve(const Field& omega);
Field spectral_laplacian(const Field& f);

}  // namespace hwlab
