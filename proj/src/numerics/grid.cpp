#include "hwlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace hwlab {

Grid::Grid(std::size_t n, double k0) : n_(n), k0_(k0) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("grid size must be even and >= 8, got " + std::to_string(n));
  if (!(k0 > 0.0) || !std::isfinite(k0))
    throw std::invalid_argument("k0 must be positive and finite");
  length_ = 2.0 * std::numbers::pi / k0;
  dx_ = length_ / static_cast<double>(n);
  kx_.resize(n);
  const auto signed_n = static_cast<long>(n);
  for (long j = 0; j < signed_n; ++j) {
    const long m = j < signed_n / 2 ? j : j - signed_n;
    kx_[static_cast<std::size_t>(j)] = static_cast<double>(m) * k0;
  }
  ky_ = kx_;
}

GridPtr make_grid(std::size_t n, double k0) { return std::make_shared<const Grid>(n, k0); }

Field::Field(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}

Field::Field(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw std::invalid_argument("field payload does not match grid");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Field::mean() const { return sum() / static_cast<double>(values_.size()); }

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Field::operator==(const Field& other) const {
  return *grid_ == *other.grid_ && values_ == other.values_;
}

void require_same_grid(const Field& a, const Field& b) {
  if (a.empty() || b.empty() || !(a.grid() == b.grid()))
    throw GridMismatch("fields live on different grids");
}

}  // namespace hwlab
