#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hwlab/app.hpp"

namespace hwlab::app {

namespace {

struct Binding {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& s) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

template <class F>
Binding real(std::string key, F& field) {
  return {key, [&field] { return fmt(field); }, [&field, key](const std::string& s) { field = to_double(key, s); }};
}

template <class F>
Binding count(std::string key, F& field) {
  return {key, [&field] { return std::to_string(field); },
          [&field, key](const std::string& s) { field = static_cast<F>(to_size(key, s)); }};
}

Binding flag(std::string key, bool& field) {
  return {key, [&field] { return field ? std::string("true") : std::string("false"); },
          [&field, key](const std::string& s) { field = to_bool(key, s); }};
}

Binding text(std::string key, std::string& field) {
  return {key, [&field] { return field; }, [&field](const std::string& s) { field = s; }};
}

void add_params(std::vector<Binding>& b, const std::string& section, HwParams& p) {
  b.push_back(real(section + ".c1", p.c1));
  b.push_back(real(section + ".k0", p.k0));
  b.push_back(real(section + ".kappa", p.kappa));
  b.push_back(real(section + ".c_pb", p.c_pb));
}

std::vector<Binding> bindings(AppConfig& c) {
  std::vector<Binding> b;
  auto& s = c.simulate;
  b.push_back(count("simulate.instances", s.instances));
  b.push_back(count("simulate.grid_n", s.grid_n));
  b.push_back(real("simulate.dt", s.dt));
  b.push_back(count("simulate.n_steps", s.n_steps));
  b.push_back(count("simulate.snapshot_every", s.snapshot_every));
  b.push_back(flag("simulate.sample_params", s.sample_params));
  add_params(b, "simulate", s.params);
  b.push_back(real("simulate.nu", s.params.nu));
  b.push_back(count("simulate.hyper_order", s.params.hyper_order));
  b.push_back({"simulate.hyper_placement",
               [&s] { return std::string(s.params.placement == HyperdiffusionPlacement::self ? "self" : "printed_swap"); },
               [&s](const std::string& v) {
                 if (v == "self")
                   s.params.placement = HyperdiffusionPlacement::self;
                 else if (v == "printed_swap")
                   s.params.placement = HyperdiffusionPlacement::printed_swap;
                 else
                   throw ConfigError("simulate.hyper_placement: expected self or printed_swap");
               }});
  b.push_back(real("simulate.c1_lo", s.ranges.c1_lo));
  b.push_back(real("simulate.c1_hi", s.ranges.c1_hi));
  b.push_back(real("simulate.k0_lo", s.ranges.k0_lo));
  b.push_back(real("simulate.k0_hi", s.ranges.k0_hi));
  b.push_back(real("simulate.kappa_lo", s.ranges.kappa_lo));
  b.push_back(real("simulate.kappa_hi", s.ranges.kappa_hi));
  b.push_back(real("simulate.c_pb_lo", s.ranges.c_pb_lo));
  b.push_back(real("simulate.c_pb_hi", s.ranges.c_pb_hi));
  b.push_back(real("simulate.grf_amplitude", s.grf_amplitude));
  b.push_back(real("simulate.grf_corr_length", s.grf_corr_length));

  auto& d = c.dataset;
  b.push_back(text("dataset.source", d.source));
  b.push_back(real("dataset.train_fraction", d.train_fraction));
  b.push_back(real("dataset.t_cut", d.t_cut));
  b.push_back(real("dataset.max_dt", d.max_dt));
  b.push_back(count("dataset.pairs_per_instance", d.pairs_per_instance));
  b.push_back(real("dataset.test_max_dt", d.test_max_dt));
  b.push_back(count("dataset.test_pairs_per_instance", d.test_pairs_per_instance));
  b.push_back(text("dataset.reduced", d.reduced));

  auto& m = c.model;
  b.push_back(count("model.grid_n", m.grid_n));
  b.push_back(count("model.base_width", m.base_width));
  for (std::size_t l = 0; l < 4; ++l) b.push_back(count("model.blocks_level" + std::to_string(l), m.blocks_per_level[l]));
  b.push_back(count("model.bottleneck_blocks", m.bottleneck_blocks));
  b.push_back({"model.precision", [&m] { return std::string(m.precision == Precision::f64 ? "f64" : "f32"); },
               [&m](const std::string& v) {
                 if (v == "f32")
                   m.precision = Precision::f32;
                 else if (v == "f64")
                   m.precision = Precision::f64;
                 else
                   throw ConfigError("model.precision: expected f32 or f64");
               }});
  const char* scal[5] = {"dt", "c1", "k0", "kappa", "c_pb"};
  for (std::size_t k = 0; k < 5; ++k) b.push_back(real(std::string("model.scale_") + scal[k], m.param_scaling[k]));

  auto& t = c.train;
  b.push_back(text("train.dataset", t.dataset));
  b.push_back(text("train.test_dataset", t.test_dataset));
  b.push_back(real("train.lr", t.lr));
  b.push_back(count("train.batch_size", t.batch_size));
  b.push_back(count("train.steps", t.steps));
  b.push_back(real("train.weight_decay", t.weight_decay));

  b.push_back(text("eval.checkpoint", c.eval.checkpoint));
  b.push_back(text("eval.dataset", c.eval.dataset));

  auto& r = c.rollout;
  b.push_back(text("rollout.checkpoint", r.checkpoint));
  b.push_back(text("rollout.trajectory", r.trajectory));
  b.push_back(real("rollout.start_time", r.start_time));
  b.push_back(real("rollout.t_a", r.t_a));
  b.push_back(count("rollout.n_steps", r.n_steps));

  auto& g = c.diagnose;
  b.push_back(text("diagnose.trajectory", g.trajectory));
  b.push_back(real("diagnose.t_lo", g.t_lo));
  b.push_back(real("diagnose.t_hi", g.t_hi));
  b.push_back(real("diagnose.low_k_lo", g.low_k_lo));
  b.push_back(real("diagnose.low_k_hi", g.low_k_hi));
  b.push_back(real("diagnose.high_k_lo", g.high_k_lo));
  b.push_back(real("diagnose.high_k_hi", g.high_k_hi));

  auto& i = c.invert;
  b.push_back(text("invert.checkpoint", i.checkpoint));
  b.push_back(text("invert.dataset", i.dataset));
  b.push_back(count("invert.instance", i.instance));
  b.push_back(real("invert.lr", i.lr));
  b.push_back(count("invert.steps", i.steps));
  b.push_back(count("invert.n_pairs", i.n_pairs));
  b.push_back(flag("invert.sample_init", i.sample_init));
  add_params(b, "invert", i.init_guess);
  b.push_back(real("invert.weight_decay", i.weight_decay));
  return b;
}

void apply(std::vector<Binding>& b, const std::string& key, const std::string& value) {
  for (auto& binding : b)
    if (binding.key == key) {
      binding.set(value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

AppConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides) {
  AppConfig config;
  auto b = bindings(config);
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [section, node] : tree) {
    if (node.empty()) throw ConfigError("key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : node) apply(b, section + "." + key, value.get_value<std::string>());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not of the form section.key=value");
    apply(b, o.substr(0, eq), o.substr(eq + 1));
  }
  return config;
}

AppConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides);
}

std::string render_config(const AppConfig& config) {
  AppConfig copy = config;
  const auto b = bindings(copy);
  std::ostringstream out;
  std::string current;
  for (const auto& binding : b) {
    const auto dot = binding.key.find('.');
    const std::string section = binding.key.substr(0, dot);
    if (section != current) {
      out << (current.empty() ? "" : "\n") << "[" << section << "]\n";
      current = section;
    }
    out << binding.key.substr(dot + 1) << " = " << binding.get() << "\n";
  }
  return out.str();
}

}  // namespace hwlab::app
