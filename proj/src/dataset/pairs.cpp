#include <algorithm>
#include <cmath>

#include "hwlab/dataset.hpp"

namespace hwlab {

std::vector<SnapshotPair> extract_pairs(std::span<const PlasmaState> snapshots, const HwParams& params,
                                        double max_dt, double t_cut, std::mt19937_64& rng, std::size_t count) {
  if (count == 0) throw std::invalid_argument("extract_pairs: count must be >= 1");
  if (!(max_dt > 0.0)) throw std::invalid_argument("extract_pairs: max_dt must be positive");
  const std::size_t total = snapshots.size();
  if (total < 2) throw DataError("insufficient snapshots: need at least two");

  const double spacing = (snapshots.back().t - snapshots.front().t) / static_cast<double>(total - 1);
  if (!(spacing > 0.0)) throw DataError("snapshot times must increase");
  for (std::size_t i = 1; i < total; ++i) {
    if (std::abs((snapshots[i].t - snapshots[i - 1].t) - spacing) > 1e-6 * spacing)
      throw DataError("snapshots must be uniformly spaced in time");
  }
  const auto max_offset = static_cast<std::size_t>(std::floor(max_dt / spacing + 1e-9));
  if (max_offset == 0) throw DataError("snapshot spacing exceeds max_dt");

  // candidates[o - 1] holds the unused input indices that admit offset o.
  std::vector<std::vector<std::size_t>> candidates(max_offset);
  std::size_t available = 0;
  for (std::size_t o = 1; o <= max_offset; ++o) {
    for (std::size_t i = 0; i + o < total; ++i)
      if (snapshots[i].t >= t_cut - 1e-9 * std::max(1.0, std::abs(t_cut))) candidates[o - 1].push_back(i);
    available += candidates[o - 1].size();
  }
  if (available < count)
    throw DataError("insufficient snapshots after t_cut: " + std::to_string(available) + " distinct pairs for " +
                    std::to_string(count) + " requested");

  std::vector<SnapshotPair> pairs;
  pairs.reserve(count);
  std::vector<std::size_t> open_offsets;
  for (std::size_t draw = 0; draw < count; ++draw) {
    open_offsets.clear();
    for (std::size_t o = 0; o < max_offset; ++o)
      if (!candidates[o].empty()) open_offsets.push_back(o);
    const std::size_t o = open_offsets[std::uniform_int_distribution<std::size_t>(0, open_offsets.size() - 1)(rng)];
    auto& pool = candidates[o];
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
    const std::size_t input = pool[pick];
    pool[pick] = pool.back();
    pool.pop_back();

    const std::size_t offset = o + 1;
    SnapshotPair pair;
    pair.input = snapshots[input];
    pair.target_omega = snapshots[input + offset].omega;
    pair.target_n = snapshots[input + offset].n;
    pair.dt_i = std::min(static_cast<double>(offset) * spacing, max_dt);
    pair.params = params;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace hwlab
