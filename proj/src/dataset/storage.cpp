#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "hwlab/dataset.hpp"

static_assert(std::endian::native == std::endian::little, "storage code assumes a little-endian host");

namespace hwlab {

namespace {

constexpr char kDatasetMagic[4] = {'H', 'W', 'D', 'S'};
constexpr char kTrajectoryMagic[4] = {'H', 'W', 'T', 'J'};

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_f32_block(const Field& f) {
    for (double v : f.values()) put(static_cast<float>(v));
  }
  void put_f64_block(const Field& f) {
    const auto* p = reinterpret_cast<const char*>(f.values().data());
    bytes_.insert(bytes_.end(), p, p + f.size() * sizeof(double));
  }
  const std::vector<char>& bytes() const { return bytes_; }
  void clear() { bytes_.clear(); }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}
  template <class T>
  T get() {
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Field get_f32_block(const GridPtr& grid) {
    Field f(grid);
    for (double& v : f.values()) v = static_cast<double>(get<float>());
    return f;
  }
  Field get_f64_block(const GridPtr& grid) {
    Field f(grid);
    std::memcpy(f.values().data(), bytes_.data() + pos_, f.size() * sizeof(double));
    pos_ += f.size() * sizeof(double);
    return f;
  }

 private:
  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const char> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

template <class T>
void write_raw(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is, const std::string& what) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("truncated file while reading " + what);
  return v;
}

void read_record(std::istream& is, std::vector<char>& buf, std::size_t index) {
  if (!is.read(buf.data(), static_cast<std::streamsize>(buf.size())))
    throw DataError("truncated record " + std::to_string(index));
  const auto stored = read_raw<std::uint32_t>(is, "record checksum");
  if (stored != crc_of(buf)) throw DataError("checksum mismatch in record " + std::to_string(index));
}

void check_magic(std::istream& is, const char (&magic)[4], const std::filesystem::path& path) {
  char m[4];
  if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0) throw DataError("bad magic in " + path.string());
}

}  // namespace

void write_dataset(std::span<const SnapshotPair> pairs, const std::filesystem::path& path, std::size_t grid_n) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write dataset " + path.string());
  os.write(kDatasetMagic, 4);
  write_raw<std::uint32_t>(os, kDatasetVersion);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(grid_n));
  write_raw<std::uint64_t>(os, pairs.size());
  ByteWriter rec;
  for (const auto& p : pairs) {
    if (p.input.omega.n() != grid_n) throw std::invalid_argument("pair grid does not match dataset grid size");
    rec.clear();
    rec.put(p.params.c1);
    rec.put(p.params.k0);
    rec.put(p.params.kappa);
    rec.put(p.params.c_pb);
    rec.put(p.dt_i);
    rec.put_f32_block(p.input.omega);
    rec.put_f32_block(p.input.phi);
    rec.put_f32_block(p.input.n);
    rec.put_f32_block(p.target_omega);
    rec.put_f32_block(p.target_n);
    os.write(rec.bytes().data(), static_cast<std::streamsize>(rec.bytes().size()));
    write_raw<std::uint32_t>(os, crc_of(rec.bytes()));
  }
  if (!os) throw DataError("write failed for " + path.string());
}

std::vector<SnapshotPair> read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset " + path.string());
  check_magic(is, kDatasetMagic, path);
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kDatasetVersion) throw DataError("unsupported dataset version " + std::to_string(version));
  const auto n = read_raw<std::uint32_t>(is, "grid size");
  const auto count = read_raw<std::uint64_t>(is, "record count");
  const std::size_t cells = std::size_t{n} * n;
  std::vector<char> buf(5 * sizeof(double) + 5 * cells * sizeof(float));
  std::vector<SnapshotPair> pairs;
  pairs.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    read_record(is, buf, r);
    ByteReader rd(buf);
    SnapshotPair p;
    p.params.c1 = rd.get<double>();
    p.params.k0 = rd.get<double>();
    p.params.kappa = rd.get<double>();
    p.params.c_pb = rd.get<double>();
    p.dt_i = rd.get<double>();
    const auto grid = make_grid(n, p.params.k0);
    p.input.omega = rd.get_f32_block(grid);
    p.input.phi = rd.get_f32_block(grid);
    p.input.n = rd.get_f32_block(grid);
    p.input.t = 0.0;
    p.target_omega = rd.get_f32_block(grid);
    p.target_n = rd.get_f32_block(grid);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

SnapshotPair quantize_like_storage(const SnapshotPair& pair) {
  auto q = [](const Field& f) {
    Field out = f;
    for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
    return out;
  };
  SnapshotPair out = pair;
  out.input.omega = q(pair.input.omega);
  out.input.phi = q(pair.input.phi);
  out.input.n = q(pair.input.n);
  out.input.t = 0.0;
  out.target_omega = q(pair.target_omega);
  out.target_n = q(pair.target_n);
  out.params.nu = HwParams{}.nu;
  out.params.hyper_order = HwParams{}.hyper_order;
  out.params.placement = HwParams{}.placement;
  return out;
}

struct TrajectoryWriter::Impl {
  std::ofstream os;
  std::size_t grid_n;
  std::uint64_t count = 0;
  ByteWriter rec;
};

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path, std::size_t grid_n, const HwParams& params)
    : impl_(std::make_unique<Impl>()) {
  impl_->os.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->os) throw DataError("cannot write trajectory " + path.string());
  impl_->grid_n = grid_n;
  auto& os = impl_->os;
  os.write(kTrajectoryMagic, 4);
  write_raw<std::uint32_t>(os, kTrajectoryVersion);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(grid_n));
  write_raw<std::uint64_t>(os, 0);
  write_raw(os, params.c1);
  write_raw(os, params.k0);
  write_raw(os, params.kappa);
  write_raw(os, params.c_pb);
  write_raw(os, params.nu);
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(params.hyper_order));
}

TrajectoryWriter::~TrajectoryWriter() {
  if (impl_ && impl_->os.is_open()) {
    try {
      close();
    } catch (...) {
    }
  }
}

void TrajectoryWriter::append(const PlasmaState& state) {
  if (state.omega.n() != impl_->grid_n) throw std::invalid_argument("snapshot grid does not match trajectory");
  auto& rec = impl_->rec;
  rec.clear();
  rec.put(state.t);
  rec.put_f64_block(state.omega);
  rec.put_f64_block(state.phi);
  rec.put_f64_block(state.n);
  impl_->os.write(rec.bytes().data(), static_cast<std::streamsize>(rec.bytes().size()));
  write_raw<std::uint32_t>(impl_->os, crc_of(rec.bytes()));
  ++impl_->count;
}

void TrajectoryWriter::close() {
  auto& os = impl_->os;
  os.seekp(12);
  write_raw<std::uint64_t>(os, impl_->count);
  os.close();
  if (!os) throw DataError("failed to finalize trajectory file");
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open trajectory " + path.string());
  check_magic(is, kTrajectoryMagic, path);
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kTrajectoryVersion) throw DataError("unsupported trajectory version " + std::to_string(version));
  const auto n = read_raw<std::uint32_t>(is, "grid size");
  const auto count = read_raw<std::uint64_t>(is, "snapshot count");
  Trajectory traj;
  traj.params.c1 = read_raw<double>(is, "c1");
  traj.params.k0 = read_raw<double>(is, "k0");
  traj.params.kappa = read_raw<double>(is, "kappa");
  traj.params.c_pb = read_raw<double>(is, "c_pb");
  traj.params.nu = read_raw<double>(is, "nu");
  traj.params.hyper_order = static_cast<int>(read_raw<std::uint32_t>(is, "hyper order"));
  const auto grid = make_grid(n, traj.params.k0);
  std::vector<char> buf(sizeof(double) + 3 * grid->size() * sizeof(double));
  traj.snapshots.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    read_record(is, buf, r);
    ByteReader rd(buf);
    PlasmaState s;
    s.t = rd.get<double>();
    s.omega = rd.get_f64_block(grid);
    s.phi = rd.get_f64_block(grid);
    s.n = rd.get_f64_block(grid);
    traj.snapshots.push_back(std::move(s));
  }
  return traj;
}

}  // namespace hwlab
