#include <cmath>

#include "hwlab/numerics.hpp"

namespace hwlab {

void fd_deriv_into(const Field& f, Axis axis, Field& out) {
  const std::size_t n = f.n();
  const double inv2dx = 0.5 / f.grid().dx();
  const auto in = f.values();
  auto o = out.values();
  for (std::size_t iy = 0; iy < n; ++iy) {
    const std::size_t up = (iy + 1 == n ? 0 : iy + 1) * n;
    const std::size_t dn = (iy == 0 ? n - 1 : iy - 1) * n;
    const std::size_t row = iy * n;
    if (axis == Axis::y) {
      for (std::size_t ix = 0; ix < n; ++ix) o[row + ix] = (in[up + ix] - in[dn + ix]) * inv2dx;
    } else {
      o[row] = (in[row + 1] - in[row + n - 1]) * inv2dx;
      for (std::size_t ix = 1; ix + 1 < n; ++ix) o[row + ix] = (in[row + ix + 1] - in[row + ix - 1]) * inv2dx;
      o[row + n - 1] = (in[row] - in[row + n - 2]) * inv2dx;
    }
  }
}

Field fd_deriv(const Field& f, Axis axis) {
  Field out(f.grid_ptr());
  fd_deriv_into(f, axis, out);
  return out;
}

void fd_laplacian_into(const Field& f, Field& out) {
  const std::size_t n = f.n();
  const double dx = f.grid().dx();
  const double inv = 1.0 / (dx * dx);
  const auto in = f.values();
  auto o = out.values();
  for (std::size_t iy = 0; iy < n; ++iy) {
    const std::size_t up = (iy + 1 == n ? 0 : iy + 1) * n;
    const std::size_t dn = (iy == 0 ? n - 1 : iy - 1) * n;
    const std::size_t row = iy * n;
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t l = ix == 0 ? n - 1 : ix - 1;
      const std::size_t r = ix + 1 == n ? 0 : ix + 1;
      o[row + ix] = (in[row + l] + in[row + r] + in[up + ix] + in[dn + ix] - 4.0 * in[row + ix]) * inv;
    }
  }
}

Field fd_laplacian(const Field& f) {
  Field out(f.grid_ptr());
  fd_laplacian_into(f, out);
  return out;
}

Field iterated_laplacian(const Field& f, int order) {
  if (order < 1) throw std::invalid_argument("iterated_laplacian order must be >= 1");
  Field cur = fd_laplacian(f);
  Field next(f.grid_ptr());
  for (int i = 1; i < order; ++i) {
    fd_laplacian_into(cur, next);
    std::swap(cur, next);
  }
  return cur;
}

double fd_laplacian_symbol(double kx, double ky, double dx) {
  const double sx = std::sin(0.5 * kx * dx);
  const double sy = std::sin(0.5 * ky * dx);
  return -4.0 * (sx * sx + sy * sy) / (dx * dx);
}

}  // namespace hwlab
