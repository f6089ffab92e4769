#pragma once

#include <cmath>
#include <random>

#include "hwlab/numerics.hpp"

namespace hwlab::testing {

inline Field random_field(const GridPtr& grid, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Field f(grid);
  for (auto& v : f.values()) v = d(rng);
  return f;
}

inline Field zero_mean(Field f) {
  const double m = f.mean();
  for (auto& v : f.values()) v -= m;
  return f;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double l2(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(s);
}

inline double rel_l2_diff(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
  return std::sqrt(s) / std::max(l2(b), 1e-300);
}

}  // namespace hwlab::testing
