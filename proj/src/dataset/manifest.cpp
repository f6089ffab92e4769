#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "hwlab/dataset.hpp"

namespace hwlab {

std::vector<std::uint64_t> DatasetManifest::ids(Split split) const {
  std::vector<std::uint64_t> out;
  for (const auto& inst : instances)
    if (inst.split == split) out.push_back(inst.id);
  return out;
}

std::size_t DatasetManifest::count(Split split) const { return ids(split).size(); }

void DatasetManifest::check_no_leakage() const {
  std::set<std::uint64_t> seen;
  for (const auto& inst : instances)
    if (!seen.insert(inst.id).second)
      throw DataError("instance " + std::to_string(inst.id) + " appears more than once in the manifest");
}

DatasetManifest split_instances(std::span<const InstanceRecord> instances, double train_fraction, std::uint64_t seed) {
  if (instances.size() < 2) throw std::invalid_argument("split_instances needs at least two instances");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(instances.size())));
  if (n_train == 0 || n_train == instances.size())
    throw std::invalid_argument("train_fraction leaves one side of the split empty");

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetManifest m;
  m.instances.assign(instances.begin(), instances.end());
  for (std::size_t r = 0; r < order.size(); ++r) m.instances[order[r]].split = r < n_train ? Split::train : Split::test;
  m.check_no_leakage();
  return m;
}

DatasetManifest reduced_config(const DatasetManifest& manifest, ReducedMode mode, std::uint64_t seed) {
  DatasetManifest out = manifest;
  if (mode == ReducedMode::reduced_sampling) {
    out.snapshots_per_instance =
        static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(manifest.snapshots_per_instance)));
    for (auto& inst : out.instances)
      if (inst.split == Split::train)
        inst.pair_count = static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(inst.pair_count)));
    return out;
  }
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < manifest.instances.size(); ++i)
    if (manifest.instances[i].split == Split::train) train.push_back(i);
  const auto keep = static_cast<std::size_t>(std::lround(static_cast<double>(train.size()) / 3.0));
  std::mt19937_64 rng(seed);
  std::shuffle(train.begin(), train.end(), rng);
  std::set<std::size_t> dropped(train.begin() + static_cast<std::ptrdiff_t>(keep), train.end());
  out.instances.clear();
  for (std::size_t i = 0; i < manifest.instances.size(); ++i)
    if (!dropped.contains(i)) out.instances.push_back(manifest.instances[i]);
  return out;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.check_no_leakage();
  std::ofstream os(path);
  if (!os) throw DataError("cannot write manifest " + path.string());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "# hwlab dataset manifest\n";
  os << "grid_n = " << m.grid_n << '\n';
  os << "t_cut = " << m.t_cut << '\n';
  os << "snapshots_per_instance = " << m.snapshots_per_instance << '\n';
  os << "instances = " << m.instances.size() << '\n';
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    const auto& r = m.instances[i];
    const std::string p = "instance." + std::to_string(i) + '.';
    os << p << "id = " << r.id << '\n'
       << p << "seed = " << r.seed << '\n'
       << p << "c1 = " << r.params.c1 << '\n'
       << p << "k0 = " << r.params.k0 << '\n'
       << p << "kappa = " << r.params.kappa << '\n'
       << p << "c_pb = " << r.params.c_pb << '\n'
       << p << "split = " << (r.split == Split::train ? "train" : "test") << '\n'
       << p << "pairs = " << r.pair_count << '\n';
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed manifest line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("manifest is missing key " + key);
    return it->second;
  };
  DatasetManifest m;
  m.grid_n = std::stoul(get("grid_n"));
  m.t_cut = std::stod(get("t_cut"));
  m.snapshots_per_instance = std::stoul(get("snapshots_per_instance"));
  const std::size_t count = std::stoul(get("instances"));
  for (std::size_t i = 0; i < count; ++i) {
    const std::string p = "instance." + std::to_string(i) + '.';
    InstanceRecord r;
    r.id = std::stoull(get(p + "id"));
    r.seed = std::stoull(get(p + "seed"));
    r.params.c1 = std::stod(get(p + "c1"));
    r.params.k0 = std::stod(get(p + "k0"));
    r.params.kappa = std::stod(get(p + "kappa"));
    r.params.c_pb = std::stod(get(p + "c_pb"));
    const std::string& split = get(p + "split");
    if (split != "train" && split != "test") throw DataError("unknown split label " + split);
    r.split = split == "train" ? Split::train : Split::test;
    r.pair_count = std::stoul(get(p + "pairs"));
    m.instances.push_back(r);
  }
  m.check_no_leakage();
  return m;
}

}  // namespace hwlab
