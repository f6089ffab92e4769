#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "hwlab/dataset.hpp"
#include "support.hpp"

using namespace hwlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hwlab_dataset_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<PlasmaState> synthetic_trajectory(std::size_t count, double spacing, double t0 = 0.0,
                                              std::size_t n = 8) {
  const auto g = make_grid(n, 0.6);
  std::mt19937_64 rng(17);
  std::vector<PlasmaState> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(make_state(testing::random_field(g, rng), testing::random_field(g, rng), t0 + spacing * i));
  return out;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<InstanceRecord> instances(std::size_t count) {
  std::vector<InstanceRecord> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].id = i;
    out[i].seed = 100 + i;
    out[i].pair_count = 20000;
  }
  return out;
}

}  // namespace

TEST_CASE("extract_pairs contract") {
  const auto traj = synthetic_trajectory(200, 0.25);
  const HwParams p;
  std::mt19937_64 rng(1);
  const auto pairs = extract_pairs(traj, p, 1.0, 10.0, rng, 100);
  REQUIRE(pairs.size() == 100);
  std::set<std::pair<double, double>> seen;
  for (const auto& pr : pairs) {
    CHECK(pr.dt_i > 0.0);
    CHECK(pr.dt_i <= 1.0);
    CHECK(pr.input.t >= 10.0);
    CHECK(pr.target_time() > pr.input.t);
    seen.insert({pr.input.t, pr.dt_i});
    // target matches the snapshot at input time + dt
    const auto k = static_cast<std::size_t>(std::lround(pr.target_time() / 0.25));
    CHECK(pr.target_omega == traj[k].omega);
    CHECK(pr.target_n == traj[k].n);
  }
  CHECK(seen.size() == pairs.size());

  std::mt19937_64 a(5), b(5);
  const auto pa = extract_pairs(traj, p, 1.0, 10.0, a, 20);
  const auto pb = extract_pairs(traj, p, 1.0, 10.0, b, 20);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].input.t == pb[i].input.t);
    CHECK(pa[i].dt_i == pb[i].dt_i);
  }
}

TEST_CASE("extract_pairs offsets are uniform") {
  const auto traj = synthetic_trajectory(400, 0.25, 0.0, 8);
  std::map<double, int> freq;
  std::mt19937_64 rng(2);
  for (int call = 0; call < 100; ++call)
    for (const auto& pr : extract_pairs(traj, HwParams{}, 1.0, 0.0, rng, 100)) ++freq[pr.dt_i];
  REQUIRE(freq.size() == 4);
  for (double dt : {0.25, 0.5, 0.75, 1.0}) {
    REQUIRE(freq.count(dt) == 1);
    CHECK(std::abs(freq[dt] / 10000.0 - 0.25) <= 0.03);
  }
  MESSAGE("offset counts " << freq[0.25] << " " << freq[0.5] << " " << freq[0.75] << " " << freq[1.0]);
}

TEST_CASE("extract_pairs errors") {
  std::mt19937_64 rng(3);
  const auto early = synthetic_trajectory(20, 0.25);
  CHECK_THROWS_AS(extract_pairs(early, HwParams{}, 1.0, 100.0, rng, 1), DataError);
  CHECK_THROWS_AS(extract_pairs(early, HwParams{}, 1.0, 0.0, rng, 0), std::invalid_argument);
  CHECK_THROWS_AS(extract_pairs(early, HwParams{}, 1.0, 0.0, rng, 100000), DataError);
  CHECK_THROWS_AS(extract_pairs(early, HwParams{}, 0.1, 0.0, rng, 1), DataError);
  auto uneven = early;
  uneven[5].t += 0.1;
  CHECK_THROWS_AS(extract_pairs(uneven, HwParams{}, 1.0, 0.0, rng, 1), DataError);
}

TEST_CASE("split_instances") {
  const auto full = split_instances(instances(320), 0.75, 1);
  CHECK(full.count(Split::train) == 240);
  CHECK(full.count(Split::test) == 80);
  CHECK_NOTHROW(full.check_no_leakage());

  const auto four = split_instances(instances(4), 0.75, 1);
  CHECK(four.count(Split::train) == 3);
  CHECK(four.count(Split::test) == 1);

  const auto again = split_instances(instances(320), 0.75, 1);
  CHECK(again.ids(Split::train) == full.ids(Split::train));
  const auto other = split_instances(instances(320), 0.75, 2);
  CHECK(other.ids(Split::train) != full.ids(Split::train));

  std::set<std::uint64_t> all;
  for (auto id : full.ids(Split::train)) all.insert(id);
  for (auto id : full.ids(Split::test)) CHECK(all.insert(id).second);
  CHECK(all.size() == 320);

  CHECK_THROWS(split_instances(instances(1), 0.5, 0));
  CHECK_THROWS(split_instances(instances(4), 0.0, 0));
  CHECK_THROWS(split_instances(instances(4), 1.0, 0));
  CHECK_THROWS(split_instances(instances(2), 0.1, 0));
}

TEST_CASE("leakage check") {
  auto m = split_instances(instances(6), 0.5, 3);
  auto dup = m.instances.front();
  dup.split = dup.split == Split::train ? Split::test : Split::train;
  m.instances.push_back(dup);
  CHECK_THROWS_AS(m.check_no_leakage(), DataError);
}

TEST_CASE("reduced_config") {
  auto full = split_instances(instances(320), 0.75, 4);
  full.snapshots_per_instance = 20000;
  const auto fewer = reduced_config(full, ReducedMode::reduced_instances, 1);
  CHECK(fewer.count(Split::train) == 80);
  CHECK(fewer.count(Split::test) == 80);
  CHECK(fewer.snapshots_per_instance == 20000);
  CHECK(fewer.ids(Split::test) == full.ids(Split::test));

  const auto sparse = reduced_config(full, ReducedMode::reduced_sampling, 1);
  CHECK(sparse.count(Split::train) == 240);
  CHECK(sparse.snapshots_per_instance == 6000);

  auto desk = split_instances(instances(16), 0.75, 4);
  desk.snapshots_per_instance = 400;
  const auto desk_r = reduced_config(desk, ReducedMode::reduced_instances, 1);
  CHECK(desk_r.count(Split::train) == 4);
  CHECK(desk_r.snapshots_per_instance == 400);
}

TEST_CASE("manifest round trip") {
  TempDir dir;
  auto m = split_instances(instances(5), 0.6, 9);
  m.grid_n = 32;
  m.t_cut = 100.0;
  m.snapshots_per_instance = 300;
  m.instances[2].params.c1 = 0.9312345678901234;
  write_manifest(m, dir.path / "manifest.txt");
  const auto r = read_manifest(dir.path / "manifest.txt");
  CHECK(r.grid_n == 32);
  CHECK(r.t_cut == 100.0);
  CHECK(r.snapshots_per_instance == 300);
  REQUIRE(r.instances.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.instances[i].id == m.instances[i].id);
    CHECK(r.instances[i].seed == m.instances[i].seed);
    CHECK(r.instances[i].split == m.instances[i].split);
    CHECK(r.instances[i].pair_count == m.instances[i].pair_count);
    CHECK(r.instances[i].params.c1 == m.instances[i].params.c1);
    CHECK(r.instances[i].params.k0 == m.instances[i].params.k0);
  }
  CHECK_THROWS_AS(read_manifest(dir.path / "missing.txt"), DataError);
}

TEST_CASE("dataset storage round trip") {
  TempDir dir;
  const auto traj = synthetic_trajectory(40, 0.25, 0.0, 16);
  HwParams p;
  p.c1 = 1.0123456789;
  p.c_pb = 0.9345;
  std::mt19937_64 rng(4);
  const auto pairs = extract_pairs(traj, p, 1.0, 0.0, rng, 12);
  const auto file = dir.path / "pairs.hwds";
  write_dataset(pairs, file, 16);
  const auto back = read_dataset(file);
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SnapshotPair q = quantize_like_storage(pairs[i]);
    CHECK(back[i].dt_i == pairs[i].dt_i);
    CHECK(back[i].params.c1 == p.c1);
    CHECK(back[i].params.c_pb == p.c_pb);
    CHECK(back[i].input.omega == q.input.omega);
    CHECK(back[i].input.phi == q.input.phi);
    CHECK(back[i].input.n == q.input.n);
    CHECK(back[i].target_omega == q.target_omega);
    CHECK(back[i].target_n == q.target_n);
  }

  // A second write of the read-back pairs reproduces the file byte for byte.
  write_dataset(back, dir.path / "again.hwds", 16);
  CHECK(slurp(file) == slurp(dir.path / "again.hwds"));

  write_dataset({}, dir.path / "empty.hwds", 16);
  CHECK(read_dataset(dir.path / "empty.hwds").empty());
  CHECK_THROWS_AS(write_dataset(pairs, dir.path / "wrong.hwds", 32), std::invalid_argument);
}

TEST_CASE("dataset storage detects damage") {
  TempDir dir;
  const auto traj = synthetic_trajectory(10, 0.5);
  std::mt19937_64 rng(5);
  const auto pairs = extract_pairs(traj, HwParams{}, 1.0, 0.0, rng, 3);
  const auto file = dir.path / "d.hwds";
  write_dataset(pairs, file, 8);
  const auto bytes = slurp(file);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  spit(dir.path / "flipped.hwds", flipped);
  CHECK_THROWS_AS(read_dataset(dir.path / "flipped.hwds"), DataError);

  spit(dir.path / "short.hwds", std::vector<char>(bytes.begin(), bytes.end() - 7));
  CHECK_THROWS_AS(read_dataset(dir.path / "short.hwds"), DataError);

  auto magic = bytes;
  magic[0] = 'X';
  spit(dir.path / "magic.hwds", magic);
  CHECK_THROWS_AS(read_dataset(dir.path / "magic.hwds"), DataError);

  auto version = bytes;
  version[4] = 9;
  spit(dir.path / "version.hwds", version);
  CHECK_THROWS_AS(read_dataset(dir.path / "version.hwds"), DataError);

  CHECK_THROWS_AS(read_dataset(dir.path / "none.hwds"), DataError);
}

TEST_CASE("trajectory storage round trip") {
  TempDir dir;
  const auto traj = synthetic_trajectory(6, 0.05, 100.0, 16);
  HwParams p;
  p.kappa = 1.0789;
  const auto file = dir.path / "t.hwtj";
  {
    TrajectoryWriter w(file, 16, p);
    for (const auto& s : traj) w.append(s);
    w.close();
  }
  const Trajectory back = read_trajectory(file);
  CHECK(back.params.kappa == p.kappa);
  CHECK(back.params.nu == p.nu);
  CHECK(back.params.hyper_order == p.hyper_order);
  REQUIRE(back.snapshots.size() == traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(back.snapshots[i].t == traj[i].t);
    CHECK(back.snapshots[i].omega == traj[i].omega);
    CHECK(back.snapshots[i].phi == traj[i].phi);
    CHECK(back.snapshots[i].n == traj[i].n);
  }

  auto bytes = slurp(file);
  bytes[bytes.size() - 20] ^= 0x01;
  spit(dir.path / "bad.hwtj", bytes);
  CHECK_THROWS_AS(read_trajectory(dir.path / "bad.hwtj"), DataError);
}

TEST_CASE("quantize_like_storage is idempotent") {
  const auto traj = synthetic_trajectory(4, 0.5);
  std::mt19937_64 rng(6);
  const auto pr = extract_pairs(traj, HwParams{}, 1.0, 0.0, rng, 1).front();
  const auto q1 = quantize_like_storage(pr);
  const auto q2 = quantize_like_storage(q1);
  CHECK(q1.input.omega == q2.input.omega);
  CHECK(q1.target_n == q2.target_n);
  for (double v : q1.input.omega.values()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
}
