#pragma once

// Dense feed-forward networks trained with binary cross-entropy and Adam,
// with an optional monotone multi-output head:
//
//   e_j = g(h_j)            g >= 0   (exp or softplus)
//   c_j = e_1 + ... + e_j   prefix sum, non-decreasing in j
//   o_j = f(c_j)            f increasing, [0, inf) -> [0, 1)
//
// Networks are described by widths (d_x, h_1, ..., h_k, M_out). Every layer
// except the last applies the hidden activation; the last linear layer feeds
// the head.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/rng.hpp"

namespace dte::nn {

using RowVector = Eigen::RowVectorXd;

enum class Activation { Relu, Sigmoid };
enum class Increment { Exp, Softplus };       // g
enum class Squash { ArctanScaled, TanhHalf }; // f

struct Head {
  enum class Kind { PlainSigmoid, Monotone } kind = Kind::PlainSigmoid;
  Increment g = Increment::Exp;
  Squash f = Squash::ArctanScaled;

  static Head plain() { return {}; }
  static Head monotone(Increment g = Increment::Exp, Squash f = Squash::ArctanScaled) {
    return {Kind::Monotone, g, f};
  }
  bool is_monotone() const noexcept { return kind == Kind::Monotone; }
};

struct LayerSpec {
  std::vector<int> widths;
  Activation hidden = Activation::Relu;
  Head head;

  int inputs() const { return widths.front(); }
  int outputs() const { return widths.back(); }
  std::size_t num_layers() const { return widths.size() - 1; }

  void check() const {
    if (widths.size() < 2)
      throw Error(ErrorCode::InvalidArgument, "nn", "need at least input and output widths");
    for (int w : widths)
      if (w < 1) throw Error(ErrorCode::InvalidArgument, "nn", "layer widths must be >= 1");
  }

  // Same trunk, different output width.
  LayerSpec with_outputs(int m, Head h) const {
    LayerSpec s = *this;
    s.widths.back() = m;
    s.head = h;
    return s;
  }
};

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 16;
  int epochs = 30;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double prediction_clamp = 1e-7;

  void check() const {
    if (!(learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "nn", "learning_rate must be > 0");
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "nn", "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "nn", "epochs must be >= 1");
    if (!(prediction_clamp > 0 && prediction_clamp < 0.5))
      throw Error(ErrorCode::InvalidArgument, "nn", "prediction_clamp must lie in (0, 0.5)");
  }
};

struct Layer {
  Matrix weight;  // fan_in x fan_out
  RowVector bias; // fan_out
};

using Gradients = std::vector<Layer>;

struct NetworkState {
  std::vector<Layer> layers;
  std::vector<Layer> first_moment;
  std::vector<Layer> second_moment;
  std::int64_t step = 0;

  std::size_t num_parameters() const {
    std::size_t p = 0;
    for (const auto& l : layers) p += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return p;
  }

  bool all_finite() const {
    return std::all_of(layers.begin(), layers.end(), [](const Layer& l) {
      return l.weight.allFinite() && l.bias.allFinite();
    });
  }
};

namespace detail {

inline std::vector<Layer> zeros_like(const std::vector<Layer>& layers) {
  std::vector<Layer> out;
  out.reserve(layers.size());
  for (const auto& l : layers)
    out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), RowVector::Zero(l.bias.size())});
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double increment(Increment g, double h) { return g == Increment::Exp ? std::exp(h) : softplus(h); }
inline double increment_deriv(Increment g, double h) { return g == Increment::Exp ? std::exp(h) : sigmoid(h); }

inline double squash(Squash f, double c) {
  return f == Squash::ArctanScaled ? std::atan(c) * (2.0 / std::numbers::pi) : std::tanh(0.5 * c);
}
inline double squash_deriv(Squash f, double c) {
  if (f == Squash::ArctanScaled) return (2.0 / std::numbers::pi) / (1.0 + c * c);
  const double t = std::tanh(0.5 * c);
  return 0.5 * (1.0 - t * t);
}

struct ForwardCache {
  std::vector<Matrix> pre;   // linear outputs per layer
  std::vector<Matrix> post;  // activations per hidden layer (post[k] feeds layer k+1)
  Matrix cumulative;         // monotone head prefix sums
  Matrix output;
};

inline void activate(Activation a, const Matrix& z, Matrix& out) {
  if (a == Activation::Relu)
    out = z.cwiseMax(0.0);
  else
    out = z.unaryExpr([](double v) { return sigmoid(v); });
}

inline ForwardCache forward_cached(const NetworkState& state, const LayerSpec& spec, const Matrix& x) {
  if (x.cols() != spec.inputs())
    throw Error(ErrorCode::ShapeMismatch, "nn",
                "input has " + std::to_string(x.cols()) + " columns, network expects " +
                    std::to_string(spec.inputs()));
  if (state.layers.size() != spec.num_layers())
    throw Error(ErrorCode::ShapeMismatch, "nn", "network state does not match layer spec");

  ForwardCache cache;
  const std::size_t nl = state.layers.size();
  cache.pre.resize(nl);
  cache.post.resize(nl - 1);
  const Matrix* input = &x;
  for (std::size_t k = 0; k < nl; ++k) {
    const Layer& layer = state.layers[k];
    cache.pre[k].noalias() = (*input) * layer.weight;
    cache.pre[k].rowwise() += layer.bias;
    if (k + 1 < nl) {
      activate(spec.hidden, cache.pre[k], cache.post[k]);
      input = &cache.post[k];
    }
  }

  const Matrix& h = cache.pre.back();
  cache.output.resize(h.rows(), h.cols());
  if (spec.head.is_monotone()) {
    cache.cumulative.resize(h.rows(), h.cols());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        acc += increment(spec.head.g, h(i, j));
        cache.cumulative(i, j) = acc;
        cache.output(i, j) = squash(spec.head.f, acc);
      }
    }
  } else {
    cache.output = h.unaryExpr([](double v) { return sigmoid(v); });
  }
  return cache;
}

}  // namespace detail

/// Glorot-uniform weights, zero biases, zeroed Adam moments.
inline NetworkState init_network(const LayerSpec& spec, std::uint64_t seed) {
  spec.check();
  Rng rng(derive_seed(seed, {0x1A17}));
  NetworkState state;
  for (std::size_t k = 0; k < spec.num_layers(); ++k) {
    const int fan_in = spec.widths[k];
    const int fan_out = spec.widths[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> unif(-limit, limit);
    Layer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = unif(rng);
    state.layers.push_back(std::move(layer));
  }
  state.first_moment = detail::zeros_like(state.layers);
  state.second_moment = detail::zeros_like(state.layers);
  return state;
}

/// Output probabilities, one row per input row. Raw (unclamped).
inline Matrix forward(const NetworkState& state, const LayerSpec& spec, const Matrix& x) {
  return detail::forward_cached(state, spec, x).output;
}

/// Mean binary cross-entropy over all batch rows and outputs, predictions
/// clamped to [clamp, 1 - clamp].
inline double bce_loss(const Matrix& pred, const Matrix& target, double clamp = 1e-7) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw Error(ErrorCode::ShapeMismatch, "nn", "prediction and target shapes differ");
  if (pred.size() == 0) throw Error(ErrorCode::ShapeMismatch, "nn", "empty batch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < pred.cols(); ++j)
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double p = std::clamp(pred(i, j), clamp, 1.0 - clamp);
      const double t = target(i, j);
      total -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
    }
  return total / static_cast<double>(pred.size());
}

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

/// Loss of forward(x) against target and its exact gradient with respect to
/// every weight and bias.
inline LossAndGradients backward(const NetworkState& state, const LayerSpec& spec, const Matrix& x,
                                 const Matrix& target, double clamp = 1e-7) {
  const detail::ForwardCache cache = detail::forward_cached(state, spec, x);
  const Matrix& out = cache.output;
  if (target.rows() != out.rows() || target.cols() != out.cols())
    throw Error(ErrorCode::ShapeMismatch, "nn", "target shape does not match network output");

  LossAndGradients result;
  result.loss = bce_loss(out, target, clamp);
  const double scale = 1.0 / static_cast<double>(out.size());

  // d loss / d (last linear output)
  Matrix delta(out.rows(), out.cols());
  if (spec.head.is_monotone()) {
    const Matrix& h = cache.pre.back();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double tail = 0.0;  // sum over j >= m of d loss / d c_j
      for (Eigen::Index j = out.cols() - 1; j >= 0; --j) {
        const double p = out(i, j);
        double dp = 0.0;
        if (p > clamp && p < 1.0 - clamp) dp = scale * (p - target(i, j)) / (p * (1.0 - p));
        tail += dp * detail::squash_deriv(spec.head.f, cache.cumulative(i, j));
        delta(i, j) = tail * detail::increment_deriv(spec.head.g, h(i, j));
      }
    }
  } else {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double p = out(i, j);
        delta(i, j) = (p > clamp && p < 1.0 - clamp) ? scale * (p - target(i, j)) : 0.0;
      }
  }

  const std::size_t nl = state.layers.size();
  result.gradients.resize(nl);
  for (std::size_t k = nl; k-- > 0;) {
    const Matrix& input = k == 0 ? x : cache.post[k - 1];
    result.gradients[k].weight.noalias() = input.transpose() * delta;
    result.gradients[k].bias = delta.colwise().sum();
    if (k == 0) break;
    Matrix upstream;
    upstream.noalias() = delta * state.layers[k].weight.transpose();
    const Matrix& z = cache.pre[k - 1];
    if (spec.hidden == Activation::Relu) {
      delta = (z.array() > 0.0).select(upstream, 0.0);
    } else {
      const Matrix& a = cache.post[k - 1];
      delta = upstream.array() * a.array() * (1.0 - a.array());
    }
  }
  return result;
}

/// One Adam update with bias correction, in place.
inline void adam_step(NetworkState& state, const Gradients& grads, const TrainConfig& config) {
  if (grads.size() != state.layers.size())
    throw Error(ErrorCode::ShapeMismatch, "nn", "gradient set does not match network");
  for (const auto& g : grads)
    if (!g.weight.allFinite() || !g.bias.allFinite())
      throw Error(ErrorCode::NonFiniteGradient, "nn",
                  "gradient contains non-finite values at step " + std::to_string(state.step));

  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < state.layers.size(); ++k) {
    update(state.layers[k].weight, state.first_moment[k].weight, state.second_moment[k].weight,
           grads[k].weight);
    update(state.layers[k].bias, state.first_moment[k].bias, state.second_moment[k].bias,
           grads[k].bias);
  }
}

/// Mini-batch Adam training for `config.epochs` shuffled passes. When
/// `epoch_loss` is given it receives the full-data loss before training and
/// after every epoch.
inline NetworkState train(const Matrix& x, const Matrix& labels, const LayerSpec& spec,
                          const TrainConfig& config, std::vector<double>* epoch_loss = nullptr) {
  config.check();
  spec.check();
  if (x.rows() == 0) throw Error(ErrorCode::TooFewUnits, "nn", "training subset is empty");
  if (labels.rows() != x.rows() || labels.cols() != spec.outputs())
    throw Error(ErrorCode::ShapeMismatch, "nn", "labels shape does not match inputs/outputs");

  NetworkState state = init_network(spec, config.seed);
  Rng shuffler(derive_seed(config.seed, {0x5EED}));
  const auto m = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  auto record = [&] {
    if (epoch_loss) epoch_loss->push_back(bce_loss(forward(state, spec, x), labels, config.prediction_clamp));
  };
  record();

  const auto batch = static_cast<std::size_t>(config.batch_size);
  Matrix xb, yb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    for (std::size_t start = 0; start < m; start += batch) {
      const std::size_t len = std::min(batch, m - start);
      xb.resize(static_cast<Eigen::Index>(len), x.cols());
      yb.resize(static_cast<Eigen::Index>(len), labels.cols());
      for (std::size_t r = 0; r < len; ++r) {
        xb.row(static_cast<Eigen::Index>(r)) = x.row(order[start + r]);
        yb.row(static_cast<Eigen::Index>(r)) = labels.row(order[start + r]);
      }
      const auto lg = backward(state, spec, xb, yb, config.prediction_clamp);
      adam_step(state, lg.gradients, config);
    }
    record();
  }
  if (!state.all_finite())
    throw Error(ErrorCode::NonFiniteGradient, "nn", "parameters became non-finite during training");
  return state;
}

}  // namespace dte::nn
