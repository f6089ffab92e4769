#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwlab/hwsim.hpp"

namespace hwlab {

/// One training / inversion sample. Only Omega and n of the target are kept.
struct SnapshotPair {
  PlasmaState input;
  Field target_omega;
  Field target_n;
  double dt_i = 0.0;
  HwParams params;

  double target_time() const { return input.t + dt_i; }
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws `count` distinct (input, target) snapshot pairs with input time
/// >= t_cut and 0 < dt_i <= max_dt. The offset (in snapshot strides) is drawn
/// uniformly first, then an unused input that admits it. Snapshots must be
/// uniformly spaced.
std::vector<SnapshotPair> extract_pairs(std::span<const PlasmaState> snapshots, const HwParams& params,
                                        double max_dt, double t_cut, std::mt19937_64& rng, std::size_t count);

enum class Split { train, test };

struct InstanceRecord {
  std::uint64_t id = 0;
  HwParams params;
  std::uint64_t seed = 0;
  Split split = Split::train;
  std::size_t pair_count = 0;
};

struct DatasetManifest {
  std::size_t grid_n = 0;
  double t_cut = 100.0;
  /// Snapshots drawn per training instance (the "sampled data" column of the
  /// reduced-data study).
  std::size_t snapshots_per_instance = 0;
  std::vector<InstanceRecord> instances;

  std::vector<std::uint64_t> ids(Split split) const;
  std::size_t count(Split split) const;
  /// Throws DataError if an id appears twice (in particular on both sides).
  void check_no_leakage() const;
};

/// Instance-level split; round(train_fraction * N) instances go to training.
DatasetManifest split_instances(std::span<const InstanceRecord> instances, double train_fraction, std::uint64_t seed);

enum class ReducedMode { reduced_instances, reduced_sampling };

/// Reduced-data configurations: keep one third of the training instances
/// (test set untouched), or 30% of the snapshots per training instance.
DatasetManifest reduced_config(const DatasetManifest& manifest, ReducedMode mode, std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Binary pair storage ("HWDS"). Little-endian header: magic, u32 version,
// u32 grid n, u64 record count. Each record: c1, k0, kappa, c_pb, dt_i as
// f64, then input Omega/phi/n and target Omega/n as row-major f32 n x n
// blocks, then a CRC32 of the record bytes.
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(std::span<const SnapshotPair> pairs, const std::filesystem::path& path, std::size_t grid_n);
/// Reads pairs back. Field payloads come back as the stored f32 values; the
/// input time is not stored and is reported as 0.
std::vector<SnapshotPair> read_dataset(const std::filesystem::path& path);

/// Rounds every field payload through f32, i.e. what a write/read cycle yields.
SnapshotPair quantize_like_storage(const SnapshotPair& pair);

// Trajectory storage ("HWTJ"): full f64 snapshots for later pair extraction.
// Header: magic, u32 version, u32 grid n, u64 snapshot count, params
// (c1, k0, kappa, c_pb, nu as f64, hyper order as u32). Each snapshot: t
// f64, Omega/phi/n f64 blocks, CRC32.
inline constexpr std::uint32_t kTrajectoryVersion = 1;

class TrajectoryWriter {
 public:
  TrajectoryWriter(const std::filesystem::path& path, std::size_t grid_n, const HwParams& params);
  ~TrajectoryWriter();
  TrajectoryWriter(const TrajectoryWriter&) = delete;
  TrajectoryWriter& operator=(const TrajectoryWriter&) = delete;

  void append(const PlasmaState& state);
  /// Patches the snapshot count into the header and closes the file.
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Trajectory read_trajectory(const std::filesystem::path& path);

}  // namespace hwlab
