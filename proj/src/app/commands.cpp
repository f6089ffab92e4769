#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>

#include "hwlab/app.hpp"
#include "hwlab/diagnostics.hpp"

namespace hwlab::app {

namespace fs = std::filesystem;

namespace {

std::ofstream open_csv(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw DataError(std::string("missing ") + what + ": expected " + path.string());
}

std::string instance_name(std::uint64_t id) {
  std::ostringstream s;
  s << std::setw(3) << std::setfill('0') << id;
  return s.str();
}

fs::path trajectory_path(const fs::path& dir, std::uint64_t id) { return dir / ("traj_" + instance_name(id) + ".hwtj"); }

std::uint32_t checkpoint_element_size(const fs::path& path) {
  require_file(path, "checkpoint");
  std::ifstream in(path, std::ios::binary);
  char head[12];
  if (!in.read(head, sizeof head) || std::string(head, 4) != "FICW")
    throw ad::CheckpointError("not a weight checkpoint: " + path.string());
  std::uint32_t elem = 0;
  std::memcpy(&elem, head + 8, sizeof elem);
  return elem;
}

/// Calls fn(Model<T>&) with the checkpoint loaded at its stored precision.
template <class Fn>
int with_checkpoint(const fs::path& path, Fn&& fn) {
  if (checkpoint_element_size(path) == sizeof(double)) {
    auto model = load_model<double>(path);
    return fn(model);
  }
  auto model = load_model<float>(path);
  return fn(model);
}

void write_params_row(std::ostream& os, const HwParams& p) { os << p.c1 << ',' << p.k0 << ',' << p.kappa << ',' << p.c_pb; }

int cmd_simulate(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const auto& s = cfg.simulate;
  if (s.instances == 0) throw ConfigError("simulate.instances must be positive");
  std::mt19937_64 param_rng(derive_seed(opt.seed, "simulate"));
  const std::uint64_t init_root = derive_seed(opt.seed, "init");

  DatasetManifest manifest;
  manifest.grid_n = s.grid_n;
  manifest.t_cut = cfg.dataset.t_cut;
  bool any_failed = false;
  for (std::uint64_t id = 0; id < s.instances; ++id) {
    SimConfig sc;
    sc.grid_n = s.grid_n;
    sc.dt = s.dt;
    sc.n_steps = s.n_steps;
    sc.snapshot_every = s.snapshot_every;
    sc.params = s.params;
    if (s.sample_params) {
      const HwParams drawn = sample_params(param_rng, s.ranges);
      sc.params.c1 = drawn.c1;
      sc.params.k0 = drawn.k0;
      sc.params.kappa = drawn.kappa;
      sc.params.c_pb = drawn.c_pb;
    }
    sc.seed = derive_seed(init_root, id);
    sc.grf_amplitude = s.grf_amplitude;
    if (s.grf_corr_length > 0.0) sc.grf_corr_length = s.grf_corr_length;
    try {
      sc.validate();
      sc.params.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }

    const fs::path traj = trajectory_path(opt.out_dir, id);
    QoiSeries series;
    try {
      TrajectoryWriter writer(traj, s.grid_n, sc.params);
      const auto seconds = simulate(sc, [&](const PlasmaState& st) {
        writer.append(st);
        append_qoi(series, st, sc.params);
      });
      writer.close();
      double total = 0.0;
      for (double v : seconds) total += v;
      log << "instance " << id << ": " << sc.n_steps << " steps in " << total << " s\n";
    } catch (const NumericalBlowUp& e) {
      log << "instance " << id << ": " << e.what() << "\n";
      fs::remove(traj);
      any_failed = true;
      continue;
    }
    auto qoi = open_csv(opt.out_dir / ("qoi_" + instance_name(id) + ".csv"));
    write_csv(qoi, series);
    manifest.instances.push_back({id, sc.params, sc.seed, Split::train, 0});
  }
  write_manifest(manifest, opt.out_dir / "manifest.txt");
  return any_failed ? kBlowUp : kOk;
}

int cmd_dataset(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const auto& d = cfg.dataset;
  const fs::path source = d.source;
  require_file(source / "manifest.txt", "simulation manifest");
  const DatasetManifest sims = read_manifest(source / "manifest.txt");

  const std::uint64_t pair_root = derive_seed(opt.seed, "pairs");
  DatasetManifest m;
  try {
    m = split_instances(sims.instances, d.train_fraction, pair_root);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  m.grid_n = sims.grid_n;
  m.t_cut = d.t_cut;
  m.snapshots_per_instance = d.pairs_per_instance;
  for (auto& inst : m.instances)
    inst.pair_count = inst.split == Split::train ? d.pairs_per_instance : d.test_pairs_per_instance;
  if (d.reduced == "reduced_instances")
    m = reduced_config(m, ReducedMode::reduced_instances, derive_seed(pair_root, "reduced"));
  else if (d.reduced == "reduced_sampling")
    m = reduced_config(m, ReducedMode::reduced_sampling, derive_seed(pair_root, "reduced"));
  else if (d.reduced != "none")
    throw ConfigError("dataset.reduced must be none, reduced_instances or reduced_sampling");
  m.check_no_leakage();

  std::vector<SnapshotPair> train_pairs, test_pairs;
  for (const auto& inst : m.instances) {
    const fs::path traj = trajectory_path(source, inst.id);
    require_file(traj, "trajectory");
    const Trajectory t = read_trajectory(traj);
    std::mt19937_64 rng(derive_seed(pair_root, inst.id));
    const bool is_train = inst.split == Split::train;
    auto pairs = extract_pairs(t.snapshots, t.params, is_train ? d.max_dt : d.test_max_dt, d.t_cut, rng,
                               inst.pair_count);
    auto& dest = is_train ? train_pairs : test_pairs;
    for (auto& p : pairs) dest.push_back(std::move(p));
    log << "instance " << inst.id << " (" << (is_train ? "train" : "test") << "): " << inst.pair_count << " pairs\n";
  }
  write_dataset(train_pairs, opt.out_dir / "train.hwds", m.grid_n);
  write_dataset(test_pairs, opt.out_dir / "test.hwds", m.grid_n);
  write_manifest(m, opt.out_dir / "manifest.txt");
  return kOk;
}

template <class T>
int train_impl(const AppConfig& cfg, const RunOptions& opt, std::ostream& log, const std::vector<SnapshotPair>& pairs,
               const std::vector<SnapshotPair>& test_pairs) {
  const std::uint64_t root = derive_seed(opt.seed, "train");
  Model<T> model(cfg.model, derive_seed(root, "weights"));
  TrainConfig tc;
  tc.lr = cfg.train.lr;
  tc.batch_size = cfg.train.batch_size;
  tc.steps = cfg.train.steps;
  tc.weight_decay = cfg.train.weight_decay;
  tc.seed = derive_seed(root, "batches");
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  log << "model parameters: " << model.param_count() << "\n";

  double best = std::numeric_limits<double>::infinity();
  auto on_epoch = [&](std::size_t epoch, std::size_t steps) {
    save_model(model, opt.out_dir / "checkpoint_epoch.ficw");
    if (test_pairs.empty()) return;
    const auto ev = evaluate(model, test_pairs);
    log << "epoch " << epoch << " (step " << steps << "): test mse " << ev.mse << "\n";
    if (ev.mse < best) {
      best = ev.mse;
      save_model(model, opt.out_dir / "best.ficw");
    }
  };
  const auto result = train(model, pairs, tc, on_epoch);
  save_model(model, opt.out_dir / "model.ficw");

  auto steps = open_csv(opt.out_dir / "loss.csv");
  steps << "step,loss\n";
  for (const auto& r : result.step_losses) steps << r.step << ',' << r.loss << '\n';
  auto epochs = open_csv(opt.out_dir / "epoch_loss.csv");
  epochs << "epoch,loss\n";
  for (const auto& r : result.epoch_losses) epochs << r.step << ',' << r.loss << '\n';
  if (!result.step_losses.empty())
    log << "loss " << result.step_losses.front().loss << " -> " << result.step_losses.back().loss << "\n";
  return kOk;
}

int cmd_train(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  require_file(cfg.train.dataset, "training dataset");
  const auto pairs = read_dataset(cfg.train.dataset);
  if (pairs.empty()) throw DataError("training dataset " + cfg.train.dataset + " is empty");
  if (pairs.front().input.omega.n() != cfg.model.grid_n)
    throw ConfigError("model.grid_n = " + std::to_string(cfg.model.grid_n) + " but the dataset grid is " +
                      std::to_string(pairs.front().input.omega.n()));
  std::vector<SnapshotPair> test_pairs;
  if (!cfg.train.test_dataset.empty()) {
    require_file(cfg.train.test_dataset, "test dataset");
    test_pairs = read_dataset(cfg.train.test_dataset);
  }
  return cfg.model.precision == Precision::f64 ? train_impl<double>(cfg, opt, log, pairs, test_pairs)
                                               : train_impl<float>(cfg, opt, log, pairs, test_pairs);
}

int cmd_eval(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  require_file(cfg.eval.dataset, "evaluation dataset");
  const auto pairs = read_dataset(cfg.eval.dataset);
  if (pairs.empty()) throw DataError("evaluation dataset " + cfg.eval.dataset + " is empty");
  return with_checkpoint(cfg.eval.checkpoint, [&](const auto& model) {
    const auto ev = evaluate(model, pairs);
    auto csv = open_csv(opt.out_dir / "eval.csv");
    csv << "pair,dt_i,mse,persistence_mse\n";
    std::size_t wins = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      csv << i << ',' << pairs[i].dt_i << ',' << ev.pair_mse[i] << ',' << ev.pair_persistence_mse[i] << '\n';
      wins += ev.pair_mse[i] < ev.pair_persistence_mse[i];
    }
    auto summary = open_csv(opt.out_dir / "eval_summary.csv");
    summary << "pairs,mse,persistence_mse,pairs_beating_persistence\n";
    summary << pairs.size() << ',' << ev.mse << ',' << ev.persistence_mse << ',' << wins << '\n';
    log << "test mse " << ev.mse << ", persistence " << ev.persistence_mse << ", " << wins << "/" << pairs.size()
        << " pairs beat persistence\n";
    return int(kOk);
  });
}

int cmd_rollout(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const auto& r = cfg.rollout;
  require_file(r.trajectory, "trajectory");
  const Trajectory traj = read_trajectory(r.trajectory);
  if (traj.snapshots.empty()) throw DataError("trajectory " + r.trajectory + " holds no snapshots");
  auto start = std::find_if(traj.snapshots.begin(), traj.snapshots.end(),
                            [&](const PlasmaState& s) { return s.t >= r.start_time - 1e-9; });
  if (start == traj.snapshots.end()) throw DataError("trajectory ends before rollout.start_time");
  RolloutConfig rc{r.t_a, r.n_steps};
  try {
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return with_checkpoint(r.checkpoint, [&](const auto& model) {
    if (model.config().grid_n != start->omega.n()) throw DataError("checkpoint grid does not match the trajectory");
    const auto states = rollout(model, *start, traj.params, rc);
    TrajectoryWriter writer(opt.out_dir / "rollout.hwtj", start->omega.n(), traj.params);
    QoiSeries series;
    for (const auto& s : states) {
      writer.append(s);
      append_qoi(series, s, traj.params);
    }
    writer.close();
    auto csv = open_csv(opt.out_dir / "rollout_qoi.csv");
    write_csv(csv, series);
    log << "rollout of " << rc.n_steps << " steps from t = " << start->t << "\n";
    return int(kOk);
  });
}

int cmd_diagnose(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const auto& g = cfg.diagnose;
  require_file(g.trajectory, "trajectory");
  const Trajectory traj = read_trajectory(g.trajectory);
  const QoiSeries series = qoi_series(traj.snapshots, traj.params);
  {
    auto csv = open_csv(opt.out_dir / "qoi.csv");
    write_csv(csv, series);
  }
  QoiSeries window;
  const PlasmaState* last = nullptr;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.times[i] >= g.t_lo && series.times[i] <= g.t_hi) {
      window.push_back(series.times[i], series.gamma_n[i], series.gamma_c[i]);
      last = &traj.snapshots[i];
    }
  if (!last) throw DataError("no snapshots in the diagnose window");
  const QoiStats stats = temporal_stats(series, g.t_lo, g.t_hi);
  {
    auto csv = open_csv(opt.out_dir / "qoi_stats.csv");
    csv << "quantity,mean,std,samples\n";
    csv << "gamma_n," << stats.gamma_n.mean << ',' << stats.gamma_n.std << ',' << stats.samples << '\n';
    csv << "gamma_c," << stats.gamma_c.mean << ',' << stats.gamma_c.std << ',' << stats.samples << '\n';
  }
  if (window.size() >= 2) {
    const auto fn = series_fft(window.times, window.gamma_n);
    const auto fc = series_fft(window.times, window.gamma_c);
    auto csv = open_csv(opt.out_dir / "qoi_fft.csv");
    csv << "frequency,gamma_n,gamma_c\n";
    for (std::size_t i = 0; i < fn.frequency.size(); ++i)
      csv << fn.frequency[i] << ',' << fn.magnitude[i] << ',' << fc.magnitude[i] << '\n';
  }
  const RadialSpectrum spec = grad_phi_spectrum(*last);
  {
    auto csv = open_csv(opt.out_dir / "spectrum.csv");
    write_csv(csv, spec);
  }
  const double k0 = last->omega.grid().k0();
  const double nyquist = static_cast<double>(last->omega.n() / 2) * k0;
  auto slopes = open_csv(opt.out_dir / "slopes.csv");
  slopes << "range,k_lo,k_hi,slope\n";
  const double ranges[2][2] = {{g.low_k_lo * k0, g.low_k_hi * k0},
                               {g.high_k_lo * k0, g.high_k_hi > 0.0 ? g.high_k_hi * k0 : nyquist}};
  const char* names[2] = {"low", "high"};
  for (int i = 0; i < 2; ++i) {
    try {
      const double slope = fit_loglog_slope(spec, ranges[i][0], ranges[i][1]);
      slopes << names[i] << ',' << ranges[i][0] << ',' << ranges[i][1] << ',' << slope << '\n';
    } catch (const std::invalid_argument& e) {
      log << names[i] << "-k slope skipped: " << e.what() << "\n";
    }
  }
  log << "gamma_n " << stats.gamma_n.mean << " +- " << stats.gamma_n.std << ", gamma_c " << stats.gamma_c.mean
      << " +- " << stats.gamma_c.std << " over " << stats.samples << " samples\n";
  return kOk;
}

/// Pairs grouped by parameter set, in order of first appearance.
std::vector<std::vector<SnapshotPair>> group_by_params(std::vector<SnapshotPair> pairs) {
  std::vector<std::vector<SnapshotPair>> groups;
  for (auto& p : pairs) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return param_vector(g.front().params) == param_vector(p.params); });
    if (it == groups.end())
      groups.push_back({std::move(p)});
    else
      it->push_back(std::move(p));
  }
  return groups;
}

int cmd_invert(const AppConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const std::size_t instance = cfg.invert.instance;
  const auto& iv = cfg.invert;
  require_file(iv.dataset, "inversion dataset");
  const auto groups = group_by_params(read_dataset(iv.dataset));
  if (groups.empty()) throw DataError("inversion dataset " + iv.dataset + " is empty");
  if (instance >= groups.size())
    throw ConfigError("invert instance " + std::to_string(instance) + " out of range (" +
                      std::to_string(groups.size()) + " parameter sets)");
  const auto& pairs = groups[instance];
  const HwParams truth = pairs.front().params;

  const std::uint64_t root = derive_seed(opt.seed, "invert");
  InverseConfig ic;
  ic.lr = iv.lr;
  ic.steps = iv.steps;
  ic.n_pairs = iv.n_pairs;
  ic.weight_decay = iv.weight_decay;
  ic.seed = derive_seed(root, "pairs");
  ic.init_guess = iv.init_guess;
  if (iv.sample_init) {
    std::mt19937_64 rng(derive_seed(root, "guess"));
    ic.init_guess = sample_params(rng, cfg.simulate.ranges);
  }
  try {
    ic.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  return with_checkpoint(iv.checkpoint, [&](const auto& model) {
    const std::uint64_t before = model.checksum();
    const auto result = invert(model, pairs, ic);
    const std::uint64_t after = model.checksum();
    auto trace = open_csv(opt.out_dir / "trace.csv");
    trace << "step,loss,c1,k0,kappa,c_pb\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
      trace << i << ',' << result.loss_trace[i] << ',';
      write_params_row(trace, result.param_trace[i]);
      trace << '\n';
    }
    auto est = open_csv(opt.out_dir / "estimate.csv");
    est << "parameter,truth,initial,estimate,initial_abs_error,final_abs_error\n";
    const auto t = param_vector(truth), i0 = param_vector(ic.init_guess), e = param_vector(result.estimate);
    const char* names[4] = {"c1", "k0", "kappa", "c_pb"};
    for (std::size_t k = 0; k < 4; ++k)
      est << names[k] << ',' << t[k] << ',' << i0[k] << ',' << e[k] << ',' << std::abs(i0[k] - t[k]) << ','
          << std::abs(e[k] - t[k]) << '\n';
    log << "loss " << result.loss_trace.front() << " -> " << result.loss_trace.back() << "; weights "
        << (before == after ? "unchanged" : "CHANGED") << "\n";
    return before == after ? int(kOk) : int(kOther);
  });
}

}  // namespace

int run(const RunOptions& options, std::ostream& log) {
  try {
    const AppConfig cfg = load_config(options.config_path, options.overrides);
    if (options.command == "reference-config") {
      const std::string text = render_config(AppConfig{});
      if (options.out_dir.empty() || options.out_dir == ".") {
        std::cout << text;
      } else {
        fs::create_directories(options.out_dir);
        write_text(options.out_dir / "reference.ini", text);
      }
      return kOk;
    }
    fs::create_directories(options.out_dir);
    write_text(options.out_dir / "config.ini", "# seed = " + std::to_string(options.seed) + "\n" + render_config(cfg));
    if (options.command == "simulate") return cmd_simulate(cfg, options, log);
    if (options.command == "dataset") return cmd_dataset(cfg, options, log);
    if (options.command == "train") return cmd_train(cfg, options, log);
    if (options.command == "eval") return cmd_eval(cfg, options, log);
    if (options.command == "rollout") return cmd_rollout(cfg, options, log);
    if (options.command == "diagnose") return cmd_diagnose(cfg, options, log);
    if (options.command == "invert") return cmd_invert(cfg, options, log);
    log << "unknown command '" << options.command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalBlowUp& e) {
    log << "numerical blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const TrainingDiverged& e) {
    log << "numerical blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const InversionDiverged& e) {
    log << "numerical blow-up: " << e.what() << "\n";
    return kBlowUp;
  } catch (const DataError& e) {
    log << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ad::CheckpointError& e) {
    log << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kOther;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App cli{"Hasegawa-Wakatani simulation, FI-Conv surrogate training and parameter inversion"};
  cli.require_subcommand(1);
  RunOptions opt;
  std::string config_path;
  std::string out_dir = ".";
  for (const char* name : {"simulate", "dataset", "train", "eval", "rollout", "diagnose", "invert", "reference-config"}) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--set", opt.overrides, "section.key=value override (repeatable)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", opt.seed, "root seed");
  }
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  opt.command = cli.get_subcommands().front()->get_name();
  opt.config_path = config_path;
  opt.out_dir = out_dir;
  return run(opt, std::cerr);
}

}  // namespace hwlab::app
