#include "sdgzsl/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sdgzsl/binary_io.hpp"

namespace sdgzsl {

namespace {

constexpr const char* kCheckpointMagic = "sdgzsl-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::vector<std::string> config_violations(const TrainConfig& cfg) {
  std::vector<std::string> v;
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) v.push_back("learning_rate must be finite and > 0");
  if (cfg.epochs < 1) v.push_back("epochs must be >= 1");
  if (cfg.batch_size < 1) v.push_back("batch_size must be >= 1");
  if (cfg.hidden_sizes) {
    for (auto h : *cfg.hidden_sizes) {
      if (h < 1) {
        v.push_back("hidden layer sizes must be >= 1");
        break;
      }
    }
  }
  return v;
}

TrainResult train(const FeatureMatrix& features, const Matrix& targets, const TrainConfig& cfg) {
  if (auto problems = config_violations(cfg); !problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
  if (features.rows() == 0) throw ValidationError("train: no training instances");
  if (features.rows() != targets.rows()) {
    throw ShapeError("train: features " + shape_str(features) + " vs targets " + shape_str(targets));
  }

  const auto d = static_cast<std::size_t>(features.cols());
  const auto S = static_cast<std::size_t>(targets.cols());
  std::vector<std::size_t> sizes{d};
  if (cfg.hidden_sizes) {
    sizes.insert(sizes.end(), cfg.hidden_sizes->begin(), cfg.hidden_sizes->end());
  } else {
    sizes.push_back(std::max(d, S));
  }
  sizes.push_back(S);

  SplitMix64 rng(cfg.seed);
  TrainResult result;
  result.params = init_mlp<double>(sizes, cfg.hidden_activation, rng);
  auto& params = result.params;

  const auto n = static_cast<std::size_t>(features.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double lr = cfg.learning_rate;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Matrix xb = features(idx, Eigen::all);
      const Matrix zb = targets(idx, Eigen::all);
      const MlpParams grad = backward(params, xb, zb);
      for (std::size_t k = 0; k < params.layers.size(); ++k) {
        params.layers[k].weight -= lr * grad.layers[k].weight;
        params.layers[k].bias -= lr * grad.layers[k].bias;
      }
    }
    const double loss = mse_loss(params, features, targets);
    if (!std::isfinite(loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (learning rate " +
                            fmt_double(lr) + "): loss is non-finite");
    }
    result.loss_history.push_back(loss);
  }
  return result;
}

TrainResult train(const GzslDataset& ds, const TrainConfig& cfg) {
  if (ds.seen_train.size() == 0) throw ValidationError("train: seen_train is empty");
  return train(ds.seen_train.features, gather_targets(ds.seen_train, ds.seen_embeddings), cfg);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  validate_params(ckpt.params);
  std::ostringstream header;
  header << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  header << "seed " << ckpt.seed << '\n';
  header << "l " << fmt_double(ckpt.unified_norm_l) << '\n';
  header << "holdout " << fmt_double(ckpt.holdout_fraction) << '\n';
  header << "layers " << ckpt.params.layers.size() << '\n';
  for (const auto& l : ckpt.params.layers) {
    header << "layer " << l.in_dim() << ' ' << l.out_dim() << ' ' << activation_name(l.activation) << '\n';
  }
  std::string blob;
  for (const auto& l : ckpt.params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) io::put_f64_le(blob, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) io::put_f64_le(blob, l.bias(r));
  }
  header << "data " << blob.size() << '\n';
  io::write_file(path, header.str() + blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string where = path.string() + ": ";
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw LoadError(where + "truncated header at offset " + std::to_string(pos));
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  auto expect_key = [&](std::istringstream& in, const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw LoadError(where + "expected '" + key + "' at offset " + std::to_string(pos));
  };

  Checkpoint ckpt;
  {
    std::istringstream in(next_line());
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic || version != kCheckpointVersion) {
      throw LoadError(where + "not an sdgzsl checkpoint");
    }
  }
  std::size_t n_layers = 0;
  {
    std::istringstream in(next_line());
    expect_key(in, "seed");
    in >> ckpt.seed;
  }
  {
    std::istringstream in(next_line());
    expect_key(in, "l");
    std::string v;
    in >> v;
    ckpt.unified_norm_l = std::stod(v);
  }
  {
    std::istringstream in(next_line());
    expect_key(in, "holdout");
    std::string v;
    in >> v;
    ckpt.holdout_fraction = std::stod(v);
  }
  {
    std::istringstream in(next_line());
    expect_key(in, "layers");
    if (!(in >> n_layers) || n_layers == 0 || n_layers > 1024) throw LoadError(where + "bad layer count");
  }
  std::size_t expected_values = 0;
  for (std::size_t k = 0; k < n_layers; ++k) {
    std::istringstream in(next_line());
    expect_key(in, "layer");
    std::size_t in_dim = 0, out_dim = 0;
    std::string act;
    if (!(in >> in_dim >> out_dim >> act) || in_dim == 0 || out_dim == 0) {
      throw LoadError(where + "bad shape for layer " + std::to_string(k));
    }
    Layer<double> layer;
    layer.weight.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
    layer.bias.resize(static_cast<Eigen::Index>(out_dim));
    try {
      layer.activation = parse_activation(act);
    } catch (const ConfigError& e) {
      throw LoadError(where + e.what());
    }
    expected_values += out_dim * in_dim + out_dim;
    ckpt.params.layers.push_back(std::move(layer));
  }
  std::size_t blob_bytes = 0;
  {
    std::istringstream in(next_line());
    expect_key(in, "data");
    in >> blob_bytes;
  }
  if (blob_bytes != 8 * expected_values || bytes.size() - pos != blob_bytes) {
    throw LoadError(where + "parameter blob at offset " + std::to_string(pos) + ": expected " +
                    std::to_string(8 * expected_values) + " bytes, got " + std::to_string(bytes.size() - pos));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  for (auto& l : ckpt.params.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c, p += 8) l.weight(r, c) = io::get_f64_le(p);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r, p += 8) l.bias(r) = io::get_f64_le(p);
  }
  try {
    validate_params(ckpt.params);
  } catch (const ShapeError& e) {
    throw LoadError(where + e.what());
  }
  return ckpt;
}

}  // namespace sdgzsl
