#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwlab/autodiff/tensor.hpp"

namespace hwlab::ad {

// Weight checkpoint ("FICW"), little-endian: magic, u32 version, u32 element
// size (4 or 8), u64 metadata length + metadata text, u64 tensor count, then
// per tensor: u32 name length, name, 4 x u64 extents, raw payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <class T>
struct Checkpoint {
  std::string metadata;
  std::vector<NamedTensor<T>> tensors;
};

template <class T>
void save_checkpoint(const Checkpoint<T>& checkpoint, const std::filesystem::path& path);

/// Throws CheckpointError on a bad header, truncation, or a precision
/// mismatch with T.
template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace hwlab::ad
