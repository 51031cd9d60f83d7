#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdgzsl/dataset.hpp"
#include "sdgzsl/rng.hpp"
#include "sdgzsl/tensor.hpp"

namespace sdgzsl {

enum class Activation { Identity, Relu, Tanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Dense layer y = act(W x + b), W is out x in.
template <typename Scalar>
struct Layer {
  MatrixX<Scalar> weight;
  VectorX<Scalar> bias;
  Activation activation = Activation::Identity;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

/// Parameters of the semantic mapping F : R^d -> R^S. A gradient has the
/// same structure, so the type doubles as the gradient container.
template <typename Scalar>
struct BasicMlp {
  std::vector<Layer<Scalar>> layers;

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }
};

using MlpParams = BasicMlp<double>;

namespace detail {

template <typename Derived>
void apply_activation(Eigen::MatrixBase<Derived>& m, Activation a) {
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      m = m.cwiseMax(typename Derived::Scalar(0));
      break;
    case Activation::Tanh:
      m = m.array().tanh().matrix();
      break;
  }
}

/// Multiplies `delta` in place by act'(pre).
template <typename Scalar>
void scale_by_derivative(MatrixX<Scalar>& delta, const MatrixX<Scalar>& pre, Activation a) {
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      delta = (pre.array() > Scalar(0)).select(delta, Scalar(0));
      break;
    case Activation::Tanh:
      delta.array() *= Scalar(1) - pre.array().tanh().square();
      break;
  }
}

}  // namespace detail

/// Throws ShapeError when layer dimensions do not chain or any parameter is non-finite.
template <typename Scalar>
void validate_params(const BasicMlp<Scalar>& p) {
  if (p.layers.empty()) throw ShapeError("mlp: no layers");
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    if (l.bias.size() != l.out_dim()) {
      throw ShapeError("mlp: layer " + std::to_string(k) + " bias length " + std::to_string(l.bias.size()) +
                       " != weight rows " + std::to_string(l.out_dim()));
    }
    if (k + 1 < p.layers.size() && p.layers[k + 1].in_dim() != l.out_dim()) {
      throw ShapeError("mlp: layer " + std::to_string(k) + " output " + shape_str(l.weight) + " does not chain into layer " +
                       std::to_string(k + 1) + " " + shape_str(p.layers[k + 1].weight));
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw ShapeError("mlp: non-finite parameter in layer " + std::to_string(k));
    }
  }
}

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases. `sizes`
/// is {d, hidden..., S}; hidden layers use `hidden`, the output layer is linear.
template <typename Scalar>
BasicMlp<Scalar> init_mlp(const std::vector<std::size_t>& sizes, Activation hidden, SplitMix64& rng) {
  if (sizes.size() < 2) throw ShapeError("init_mlp: need at least input and output sizes");
  BasicMlp<Scalar> p;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const auto in = static_cast<Eigen::Index>(sizes[k]);
    const auto out = static_cast<Eigen::Index>(sizes[k + 1]);
    if (in < 1 || out < 1) throw ShapeError("init_mlp: layer sizes must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer<Scalar> layer;
    layer.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    layer.bias = VectorX<Scalar>::Zero(out);
    layer.activation = (k + 2 < sizes.size()) ? hidden : Activation::Identity;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

/// Projects every row of `xs`.
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_batch(const BasicMlp<Scalar>& p, const Eigen::MatrixBase<Derived>& xs) {
  if (p.layers.empty()) throw ShapeError("forward: empty network");
  if (xs.cols() != p.input_dim()) {
    throw ShapeError("forward: input " + shape_str(xs) + " does not match network input dim " + std::to_string(p.input_dim()));
  }
  MatrixX<Scalar> h = xs;
  for (const auto& l : p.layers) {
    MatrixX<Scalar> next = (h * l.weight.transpose()).rowwise() + l.bias.transpose();
    detail::apply_activation(next, l.activation);
    h = std::move(next);
  }
  return h;
}

template <typename Scalar, typename Derived>
VectorX<Scalar> forward(const BasicMlp<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  if (p.layers.empty()) throw ShapeError("forward: empty network");
  if (x.size() != p.input_dim()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " != network input dim " +
                     std::to_string(p.input_dim()));
  }
  VectorX<Scalar> h = x.reshaped();
  for (const auto& l : p.layers) {
    VectorX<Scalar> next = l.weight * h + l.bias;
    detail::apply_activation(next, l.activation);
    h = std::move(next);
  }
  return h;
}

template <typename Scalar>
void check_batch_shapes(const BasicMlp<Scalar>& p, const MatrixX<Scalar>& xs, const MatrixX<Scalar>& zs,
                        const char* what) {
  if (xs.rows() != zs.rows() || xs.cols() != p.input_dim() || zs.cols() != p.output_dim()) {
    throw ShapeError(std::string(what) + ": inputs " + shape_str(xs) + " and targets " + shape_str(zs) +
                     " do not fit network " + std::to_string(p.input_dim()) + " -> " + std::to_string(p.output_dim()));
  }
  if (xs.rows() == 0) throw ShapeError(std::string(what) + ": empty batch");
}

/// (1/N) sum_i ||F(x_i) - z_i||^2.
template <typename Scalar>
Scalar mse_loss(const BasicMlp<Scalar>& p, const MatrixX<Scalar>& xs, const MatrixX<Scalar>& zs) {
  check_batch_shapes(p, xs, zs, "mse_loss");
  return (forward_batch(p, xs) - zs).rowwise().squaredNorm().sum() / static_cast<Scalar>(xs.rows());
}

/// Exact gradient of mse_loss over the given batch.
template <typename Scalar>
BasicMlp<Scalar> backward(const BasicMlp<Scalar>& p, const MatrixX<Scalar>& xs, const MatrixX<Scalar>& zs) {
  check_batch_shapes(p, xs, zs, "backward");
  const std::size_t n_layers = p.layers.size();
  std::vector<MatrixX<Scalar>> inputs(n_layers), pre(n_layers);
  MatrixX<Scalar> h = xs;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& l = p.layers[k];
    inputs[k] = h;
    pre[k] = (h * l.weight.transpose()).rowwise() + l.bias.transpose();
    h = pre[k];
    detail::apply_activation(h, l.activation);
  }

  BasicMlp<Scalar> grad;
  grad.layers.resize(n_layers);
  MatrixX<Scalar> delta = (h - zs) * (Scalar(2) / static_cast<Scalar>(xs.rows()));
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& l = p.layers[k];
    detail::scale_by_derivative(delta, pre[k], l.activation);
    grad.layers[k].weight = delta.transpose() * inputs[k];
    grad.layers[k].bias = delta.colwise().sum().transpose();
    grad.layers[k].activation = l.activation;
    if (k > 0) delta = delta * l.weight;
  }
  return grad;
}

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  /// nullopt selects one hidden layer of width max(d, S); an empty list is a linear map.
  std::optional<std::vector<std::size_t>> hidden_sizes;
  Activation hidden_activation = Activation::Relu;
};

std::vector<std::string> config_violations(const TrainConfig& cfg);

struct TrainResult {
  MlpParams params;
  /// Full training-set loss after each epoch.
  std::vector<double> loss_history;
};

/// Mini-batch SGD on the given rows. Initialization and the per-epoch
/// Fisher-Yates shuffle share one SplitMix64 stream seeded from cfg.seed.
/// Throws ValidationError on a bad config and DivergenceError on a
/// non-finite epoch loss.
TrainResult train(const FeatureMatrix& features, const Matrix& targets, const TrainConfig& cfg);

/// Trains on seen_train with each row's class embedding as target.
TrainResult train(const GzslDataset& ds, const TrainConfig& cfg);

struct Checkpoint {
  MlpParams params;
  std::uint64_t seed = 0;
  double unified_norm_l = 1.0;
  /// Fraction of seen_train withheld from training (see split_holdout).
  double holdout_fraction = 0.0;
};

/// Text header (layer shapes, activation tags, seed, l) followed by a
/// little-endian f64 blob: per layer, weight row-major then bias.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdgzsl
