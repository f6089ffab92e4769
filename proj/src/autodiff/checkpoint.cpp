#include "hwlab/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hwlab::ad {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'I', 'C', 'W'};

template <class V>
void put(std::ofstream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::ifstream& in, const std::filesystem::path& path) {
  V v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(V))) throw CheckpointError("truncated checkpoint: " + path.string());
  return v;
}

std::string get_string(std::ifstream& in, std::size_t length, const std::filesystem::path& path) {
  if (length > (std::size_t{1} << 32)) throw CheckpointError("implausible string length in " + path.string());
  std::string s(length, '\0');
  if (length && !in.read(s.data(), static_cast<std::streamsize>(length)))
    throw CheckpointError("truncated checkpoint: " + path.string());
  return s;
}

}  // namespace

template <class T>
void save_checkpoint(const Checkpoint<T>& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(T));
  put<std::uint64_t>(out, checkpoint.metadata.size());
  out.write(checkpoint.metadata.data(), static_cast<std::streamsize>(checkpoint.metadata.size()));
  put<std::uint64_t>(out, checkpoint.tensors.size());
  for (const auto& [name, tensor] : checkpoint.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    for (std::size_t e : tensor.shape()) put<std::uint64_t>(out, e);
    out.write(reinterpret_cast<const char*>(tensor.data()), static_cast<std::streamsize>(tensor.numel() * sizeof(T)));
  }
  if (!out) throw CheckpointError("write failed: " + path.string());
}

template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("not a weight checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto elem = get<std::uint32_t>(in, path);
  if (elem != sizeof(T))
    throw CheckpointError("checkpoint stores " + std::to_string(elem * 8) + "-bit values, expected " +
                          std::to_string(sizeof(T) * 8));
  Checkpoint<T> cp;
  cp.metadata = get_string(in, get<std::uint64_t>(in, path), path);
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedTensor<T> nt;
    nt.name = get_string(in, get<std::uint32_t>(in, path), path);
    Shape shape;
    for (auto& e : shape) e = get<std::uint64_t>(in, path);
    std::vector<T> data(numel(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(T))))
      throw CheckpointError("truncated tensor '" + nt.name + "' in " + path.string());
    nt.tensor = Tensor<T>(shape, std::move(data));
    cp.tensors.push_back(std::move(nt));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes in " + path.string());
  return cp;
}

template void save_checkpoint<float>(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace hwlab::ad
