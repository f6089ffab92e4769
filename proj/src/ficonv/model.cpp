#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hwlab/ficonv.hpp"

namespace hwlab {

namespace {

enum ParamKind { kWeight = 0, kZeros = 1, kOnes = 2 };

constexpr double kInitStd = 0.02;

std::size_t block_params(std::size_t c) { return 8 * c * c + 65 * c; }
std::size_t conv_params(std::size_t cin, std::size_t cout, std::size_t k) { return cin * cout * k * k + cout; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void FiConvConfig::validate() const {
  if (grid_n == 0 || grid_n % 16 != 0) throw std::invalid_argument("FI-Conv grid n must be a positive multiple of 16");
  if (base_width < 4) throw std::invalid_argument("FI-Conv base_width must be >= 4");
  for (double s : param_scaling)
    if (!std::isfinite(s)) throw std::invalid_argument("FI-Conv param_scaling entries must be finite");
}

std::string FiConvConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "grid_n = " << grid_n << "\n";
  out << "base_width = " << base_width << "\n";
  out << "blocks_per_level = " << blocks_per_level[0] << "," << blocks_per_level[1] << "," << blocks_per_level[2]
      << "," << blocks_per_level[3] << "\n";
  out << "bottleneck_blocks = " << bottleneck_blocks << "\n";
  out << "param_scaling = ";
  for (std::size_t i = 0; i < param_scaling.size(); ++i) out << (i ? "," : "") << param_scaling[i];
  out << "\n";
  out << "precision = " << (precision == Precision::f32 ? "f32" : "f64") << "\n";
  return out.str();
}

FiConvConfig FiConvConfig::from_text(const std::string& text) {
  FiConvConfig c;
  std::istringstream in(text);
  std::string line;
  auto split_list = [](const std::string& v) {
    std::vector<std::string> parts;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed model config line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "grid_n") {
      c.grid_n = std::stoul(value);
    } else if (key == "base_width") {
      c.base_width = std::stoul(value);
    } else if (key == "blocks_per_level") {
      const auto parts = split_list(value);
      if (parts.size() != 4) throw std::invalid_argument("blocks_per_level needs 4 entries");
      for (std::size_t i = 0; i < 4; ++i) c.blocks_per_level[i] = std::stoul(parts[i]);
    } else if (key == "bottleneck_blocks") {
      c.bottleneck_blocks = std::stoul(value);
    } else if (key == "param_scaling") {
      const auto parts = split_list(value);
      if (parts.size() != 5) throw std::invalid_argument("param_scaling needs 5 entries");
      for (std::size_t i = 0; i < 5; ++i) c.param_scaling[i] = std::stod(parts[i]);
    } else if (key == "precision") {
      if (value == "f32")
        c.precision = Precision::f32;
      else if (value == "f64")
        c.precision = Precision::f64;
      else
        throw std::invalid_argument("precision must be f32 or f64");
    } else {
      throw std::invalid_argument("unknown model config key: " + key);
    }
  }
  c.validate();
  return c;
}

std::size_t count_params(const FiConvConfig& config) {
  std::size_t total = conv_params(kInputChannels, config.base_width, 3);
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t w = config.width(l);
    const std::size_t next = l < 3 ? config.width(l + 1) : w;
    total += config.blocks_per_level[l] * block_params(w);
    total += conv_params(w, next, 2);
  }
  total += config.bottleneck_blocks * block_params(config.width(3));
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t w = config.width(l);
    const std::size_t cin = l == 3 ? config.width(3) : config.width(l + 1);
    total += conv_params(cin, w, 2);
    total += conv_params(2 * w, w, 3);
  }
  total += conv_params(config.base_width, kOutputChannels, 1);
  return total;
}

template <class T>
ad::Var<T> Model<T>::add_param(const std::string& name, ad::Shape shape, std::mt19937_64& rng, int kind) {
  ad::Tensor<T> t = kind == kWeight ? ad::truncated_normal<T>(shape, kInitStd, rng)
                                    : ad::Tensor<T>(shape, kind == kOnes ? T(1) : T(0));
  auto v = ad::parameter(std::move(t));
  params_.emplace_back(name, v);
  return v;
}

template <class T>
typename Model<T>::Block Model<T>::make_block(const std::string& p, std::size_t c, std::mt19937_64& rng) {
  Block b;
  b.dw_w = add_param(p + ".dw.weight", {c, 1, 7, 7}, rng, kWeight);
  b.dw_b = add_param(p + ".dw.bias", {1, c, 1, 1}, rng, kZeros);
  b.ln_g = add_param(p + ".norm.weight", {1, c, 1, 1}, rng, kOnes);
  b.ln_b = add_param(p + ".norm.bias", {1, c, 1, 1}, rng, kZeros);
  b.fc1_w = add_param(p + ".pw1.weight", {4 * c, c, 1, 1}, rng, kWeight);
  b.fc1_b = add_param(p + ".pw1.bias", {1, 4 * c, 1, 1}, rng, kZeros);
  b.grn_g = add_param(p + ".grn.gamma", {1, 4 * c, 1, 1}, rng, kZeros);
  b.grn_b = add_param(p + ".grn.beta", {1, 4 * c, 1, 1}, rng, kZeros);
  b.fc2_w = add_param(p + ".pw2.weight", {c, 4 * c, 1, 1}, rng, kWeight);
  b.fc2_b = add_param(p + ".pw2.bias", {1, c, 1, 1}, rng, kZeros);
  return b;
}

template <class T>
typename Model<T>::Conv Model<T>::make_conv(const std::string& p, ad::Shape shape, std::mt19937_64& rng) {
  Conv c;
  c.w = add_param(p + ".weight", shape, rng, kWeight);
  // Transposed convs store [Cin, Cout, kh, kw]; the bias follows the output.
  const bool transposed = p.rfind("up", 0) == 0;
  c.b = add_param(p + ".bias", {1, transposed ? shape[1] : shape[0], 1, 1}, rng, kZeros);
  return c;
}

template <class T>
Model<T>::Model(const FiConvConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t w0 = config_.base_width;
  stem_ = make_conv("stem", {w0, kInputChannels, 3, 3}, rng);
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t w = config_.width(l);
    const std::size_t next = l < 3 ? config_.width(l + 1) : w;
    for (std::size_t k = 0; k < config_.blocks_per_level[l]; ++k)
      enc_[l].push_back(make_block("enc" + std::to_string(l) + "." + std::to_string(k), w, rng));
    down_[l] = make_conv("down" + std::to_string(l), {next, w, 2, 2}, rng);
  }
  for (std::size_t k = 0; k < config_.bottleneck_blocks; ++k)
    bottleneck_.push_back(make_block("mid." + std::to_string(k), config_.width(3), rng));
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t l = 3 - i;
    const std::size_t w = config_.width(l);
    const std::size_t cin = l == 3 ? config_.width(3) : config_.width(l + 1);
    up_[l] = make_conv("up" + std::to_string(l), {cin, w, 2, 2}, rng);
    mix_[l] = make_conv("mix" + std::to_string(l), {w, 2 * w, 3, 3}, rng);
  }
  head_ = make_conv("head", {kOutputChannels, w0, 1, 1}, rng);
}

template <class T>
std::vector<ad::Var<T>> Model<T>::params() const {
  std::vector<ad::Var<T>> out;
  out.reserve(params_.size());
  for (const auto& [name, v] : params_) out.push_back(v);
  return out;
}

template <class T>
std::size_t Model<T>::param_count() const {
  std::size_t total = 0;
  for (const auto& [name, v] : params_) total += v.value().numel();
  return total;
}

template <class T>
ad::Var<T> Model<T>::block_forward(const Block& b, const ad::Var<T>& x) const {
  const ad::ConvOptions dw{1, 3, ad::PaddingMode::circular};
  auto h = ad::depthwise_conv2d(x, b.dw_w, b.dw_b, dw);
  h = ad::layer_norm(h, b.ln_g, b.ln_b);
  h = ad::linear(h, b.fc1_w, b.fc1_b);
  h = ad::gelu(h);
  h = ad::grn(h, b.grn_g, b.grn_b);
  h = ad::linear(h, b.fc2_w, b.fc2_b);
  return ad::add(x, h);
}

template <class T>
ad::Var<T> Model<T>::forward(const ad::Var<T>& input) const {
  const ad::Shape s = input.shape();
  if (s[1] != kInputChannels || s[2] != config_.grid_n || s[3] != config_.grid_n)
    throw ad::ShapeError("FI-Conv expects [B,8," + std::to_string(config_.grid_n) + "," +
                         std::to_string(config_.grid_n) + "], got " + ad::to_string(s));
  const ad::ConvOptions same3{1, 1, ad::PaddingMode::circular};
  const ad::ConvOptions down{2, 0, ad::PaddingMode::circular};

  auto h = ad::conv2d(input, stem_.w, stem_.b, same3);
  std::array<ad::Var<T>, 4> skips;
  for (std::size_t l = 0; l < 4; ++l) {
    for (const auto& b : enc_[l]) h = block_forward(b, h);
    skips[l] = h;
    h = ad::conv2d(h, down_[l].w, down_[l].b, down);
  }
  for (const auto& b : bottleneck_) h = block_forward(b, h);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t l = 3 - i;
    h = ad::conv_transpose2d(h, up_[l].w, up_[l].b, down);
    h = ad::concat_channels<T>({h, skips[l]});
    h = ad::gelu(ad::conv2d(h, mix_[l].w, mix_[l].b, same3));
  }
  return ad::conv2d(h, head_.w, head_.b, ad::ConvOptions{1, 0, ad::PaddingMode::circular});
}

template <class T>
void Model<T>::set_trainable(bool on) {
  for (auto& [name, v] : params_) v.set_requires_grad(on);
}

template <class T>
std::uint64_t Model<T>::checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& [name, v] : params_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.value().data());
    for (std::size_t i = 0; i < v.value().numel() * sizeof(T); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

template <class T>
ad::Checkpoint<T> Model<T>::to_checkpoint() const {
  ad::Checkpoint<T> cp;
  cp.metadata = config_.to_text();
  for (const auto& [name, v] : params_) cp.tensors.push_back({name, v.value()});
  return cp;
}

template <class T>
void Model<T>::load_weights(const ad::Checkpoint<T>& checkpoint) {
  if (checkpoint.tensors.size() != params_.size())
    throw ad::CheckpointError("checkpoint holds " + std::to_string(checkpoint.tensors.size()) + " tensors, model has " +
                              std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& [name, v] = params_[i];
    const auto& nt = checkpoint.tensors[i];
    if (nt.name != name || nt.tensor.shape() != v.shape())
      throw ad::CheckpointError("checkpoint tensor '" + nt.name + "' " + ad::to_string(nt.tensor.shape()) +
                                " does not match '" + name + "' " + ad::to_string(v.shape()));
    v.mutable_value() = nt.tensor;
  }
}

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
  FiConvConfig c = config_;
  c.precision = sizeof(U) == sizeof(float) ? Precision::f32 : Precision::f64;
  Model<U> out(c, 0);
  ad::Checkpoint<U> cp;
  cp.metadata = c.to_text();
  for (const auto& [name, v] : params_) cp.tensors.push_back({name, ad::cast<U>(v.value())});
  out.load_weights(cp);
  return out;
}

template <class T>
void save_model(const Model<T>& model, const std::filesystem::path& path) {
  ad::save_checkpoint(model.to_checkpoint(), path);
}

template <class T>
Model<T> load_model(const std::filesystem::path& path) {
  const auto cp = ad::load_checkpoint<T>(path);
  Model<T> model(FiConvConfig::from_text(cp.metadata), 0);
  model.load_weights(cp);
  return model;
}

template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;
template void save_model<float>(const Model<float>&, const std::filesystem::path&);
template void save_model<double>(const Model<double>&, const std::filesystem::path&);
template Model<float> load_model<float>(const std::filesystem::path&);
template Model<double> load_model<double>(const std::filesystem::path&);

}  // namespace hwlab
