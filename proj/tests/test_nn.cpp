#include <catch_amalgamated.hpp>

#include <numbers>

#include "dte/nn.hpp"
#include "support.hpp"

using namespace dte;
using namespace dte::nn;
using Catch::Matchers::WithinAbs;

namespace {

NetworkState zero_state(const LayerSpec& spec) {
  NetworkState s = init_network(spec, 1);
  for (auto& l : s.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return s;
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix random_labels(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(rng() & 1u);
  return m;
}

}  // namespace

TEST_CASE("zero network with monotone head gives arctan of prefix sums") {
  const LayerSpec spec{{3, 4, 2}, Activation::Relu, Head::monotone(Increment::Exp, Squash::ArctanScaled)};
  const Matrix out = forward(zero_state(spec), spec, Matrix::Random(5, 3));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    CHECK_THAT(out(i, 0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(out(i, 1), WithinAbs(std::atan(2.0) / (std::numbers::pi / 2), 1e-15));
  }
  CHECK_THAT(out(0, 1), WithinAbs(0.7048, 1e-4));
}

TEST_CASE("zero network with plain head gives one half") {
  const LayerSpec spec{{3, 4, 6}, Activation::Relu, Head::plain()};
  const Matrix out = forward(zero_state(spec), spec, Matrix::Random(4, 3));
  CHECK((out.array() == 0.5).all());
}

TEST_CASE("tanh-half squash and softplus increment") {
  const LayerSpec spec{{2, 3, 3}, Activation::Relu, Head::monotone(Increment::Softplus, Squash::TanhHalf)};
  const Matrix out = forward(zero_state(spec), spec, Matrix::Zero(1, 2));
  const double e = std::log(2.0);
  for (int j = 0; j < 3; ++j) CHECK_THAT(out(0, j), WithinAbs(std::tanh((j + 1) * e / 2.0), 1e-15));
}

TEST_CASE("monotone outputs never decrease across locations") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const LayerSpec spec{{4, 8, 6, 7}, Activation::Relu,
                         Head::monotone(trial % 2 ? Increment::Exp : Increment::Softplus,
                                        trial % 3 ? Squash::ArctanScaled : Squash::TanhHalf)};
    NetworkState s = init_network(spec, rng());
    for (auto& l : s.layers) l.weight = random_matrix(rng, l.weight.rows(), l.weight.cols(), 2.0);
    const Matrix out = forward(s, spec, random_matrix(rng, 100, 4, 3.0));
    for (Eigen::Index j = 1; j < out.cols(); ++j) CHECK((out.col(j).array() >= out.col(j - 1).array()).all());
  }
}

TEST_CASE("binary cross-entropy hand values") {
  Matrix p(2, 1), t(2, 1);
  p << 0.8, 0.2;
  t << 1, 0;
  CHECK_THAT(bce_loss(p, t), WithinAbs(-std::log(0.8), 1e-15));
  CHECK_THAT(bce_loss(p, t), WithinAbs(0.2231, 1e-4));
  CHECK_THAT(bce_loss(Matrix::Constant(3, 4, 0.5), random_labels(*std::make_unique<Rng>(3), 3, 4)),
             WithinAbs(std::log(2.0), 1e-15));
  Matrix exact(1, 2), target(1, 2);
  exact << 1.0, 0.0;
  target << 1.0, 0.0;
  CHECK(bce_loss(exact, target) <= -std::log(1.0 - 1e-7) + 1e-15);
}

TEST_CASE("single sigmoid unit gradient is (p - t) x") {
  const LayerSpec spec{{1, 1}, Activation::Relu, Head::plain()};
  NetworkState s = init_network(spec, 4);
  s.layers[0].weight(0, 0) = 0.3;
  s.layers[0].bias[0] = -0.1;
  Matrix x(1, 1), t(1, 1);
  x << 2.0;
  t << 1.0;
  const double p = 1.0 / (1.0 + std::exp(-(0.3 * 2.0 - 0.1)));
  const auto lg = backward(s, spec, x, t);
  CHECK_THAT(lg.gradients[0].weight(0, 0), WithinAbs((p - 1.0) * 2.0, 1e-14));
  CHECK_THAT(lg.gradients[0].bias[0], WithinAbs(p - 1.0, 1e-14));
}

TEST_CASE("backprop matches central differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const bool monotone = trial % 2 == 0;
    const LayerSpec spec{{3, 6, 5, 4},
                         trial % 4 < 2 ? Activation::Relu : Activation::Sigmoid,
                         monotone ? Head::monotone(trial % 3 ? Increment::Exp : Increment::Softplus,
                                                   trial % 5 ? Squash::ArctanScaled : Squash::TanhHalf)
                                  : Head::plain()};
    NetworkState s = init_network(spec, rng());
    for (auto& l : s.layers) l.bias = random_matrix(rng, 1, l.bias.size(), 0.1);
    if (monotone) s.layers.back().bias.array() -= 1.0;  // keep prefix sums away from saturation
    REQUIRE(s.num_parameters() <= 200);
    const Matrix x = random_matrix(rng, 8, 3);
    const Matrix t = random_labels(rng, 8, 4);
    CHECK(test::max_gradient_error(s, spec, x, t) < 1e-4);
  }
}

TEST_CASE("bias feeding only the last output moves only that output") {
  const LayerSpec plain{{2, 3, 4}, Activation::Relu, Head::plain()};
  NetworkState s = init_network(plain, 9);
  Rng rng(5);
  const Matrix x = random_matrix(rng, 6, 2);
  const Matrix t = random_labels(rng, 6, 4);
  const auto lg = backward(s, plain, x, t);
  // Gradient through o_M alone: loss restricted to column M, scaled as in the full mean.
  const Matrix out = forward(s, plain, x);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) expected += (out(i, 3) - t(i, 3)) / static_cast<double>(out.size());
  CHECK_THAT(lg.gradients.back().bias[3], WithinAbs(expected, 1e-14));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  const LayerSpec spec{{2, 3, 2}, Activation::Relu, Head::plain()};
  NetworkState s = init_network(spec, 1);
  const NetworkState before = s;
  Gradients zero = detail::zeros_like(s.layers);
  TrainConfig cfg;
  for (int k = 0; k < 5; ++k) adam_step(s, zero, cfg);
  for (std::size_t k = 0; k < s.layers.size(); ++k) {
    CHECK(s.layers[k].weight == before.layers[k].weight);
    CHECK(s.layers[k].bias == before.layers[k].bias);
  }
}

TEST_CASE("adam matches a scalar simulation under constant gradients") {
  const LayerSpec spec{{1, 1}, Activation::Relu, Head::plain()};
  NetworkState s = init_network(spec, 1);
  s.layers[0].weight(0, 0) = 0.0;
  s.layers[0].bias[0] = 0.0;
  Gradients g = detail::zeros_like(s.layers);
  g[0].weight(0, 0) = 0.25;
  g[0].bias[0] = -3.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.01;

  // Independent scalar Adam recurrence.
  auto simulate = [&](double grad, int steps) {
    double p = 0, m = 0, v = 0;
    for (int t = 1; t <= steps; ++t) {
      m = 0.9 * m + 0.1 * grad;
      v = 0.999 * v + 0.001 * grad * grad;
      const double mh = m / (1 - std::pow(0.9, t));
      const double vh = v / (1 - std::pow(0.999, t));
      p -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    return p;
  };
  double last_w = 0.0;
  for (int t = 1; t <= 50; ++t) {
    last_w = s.layers[0].weight(0, 0);
    adam_step(s, g, cfg);
  }
  CHECK_THAT(s.layers[0].weight(0, 0), WithinAbs(simulate(0.25, 50), 1e-14));
  CHECK_THAT(s.layers[0].bias[0], WithinAbs(simulate(-3.0, 50), 1e-14));
  // Per-step move approaches lr * sign(g).
  CHECK_THAT(s.layers[0].weight(0, 0) - last_w, WithinAbs(-0.01, 1e-6));
}

TEST_CASE("adam rejects non-finite gradients") {
  const LayerSpec spec{{1, 1}, Activation::Relu, Head::plain()};
  NetworkState s = init_network(spec, 1);
  Gradients g = detail::zeros_like(s.layers);
  g[0].bias[0] = std::numeric_limits<double>::infinity();
  try {
    adam_step(s, g, TrainConfig{});
    FAIL("expected NonFiniteGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteGradient);
  }
}

TEST_CASE("training separates a one-dimensional toy problem") {
  Matrix x(200, 1), y(200, 1);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = -1.0 + 2.0 * i / 199.0;
    y(i, 0) = x(i, 0) > 0 ? 1.0 : 0.0;
  }
  const LayerSpec spec{{1, 8, 1}, Activation::Relu, Head::plain()};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 3;
  std::vector<double> losses;
  const NetworkState s = train(x, y, spec, cfg, &losses);
  CHECK(losses.size() == 201);
  CHECK(losses.back() < 0.1);
  CHECK(bce_loss(forward(s, spec, x), y) == losses.back());
}

TEST_CASE("training is reproducible and validates its config") {
  Rng rng(8);
  const Matrix x = random_matrix(rng, 40, 3);
  const Matrix y = random_labels(rng, 40, 3);
  const LayerSpec spec{{3, 5, 3}, Activation::Relu, Head::monotone()};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 17;
  const NetworkState a = train(x, y, spec, cfg);
  const NetworkState b = train(x, y, spec, cfg);
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    CHECK(a.layers[k].weight == b.layers[k].weight);
    CHECK(a.layers[k].bias == b.layers[k].bias);
  }
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(x, y, spec, cfg), Error);
}

TEST_CASE("glorot initialisation bounds and zero biases") {
  const LayerSpec spec{{20, 128, 64, 19}, Activation::Relu, Head::monotone()};
  const NetworkState s = init_network(spec, 5);
  for (std::size_t k = 0; k < s.layers.size(); ++k) {
    const double limit = std::sqrt(6.0 / (spec.widths[k] + spec.widths[k + 1]));
    CHECK(s.layers[k].weight.cwiseAbs().maxCoeff() <= limit);
    CHECK(s.layers[k].bias.isZero());
  }
  CHECK(s.num_parameters() == 20 * 128 + 128 + 128 * 64 + 64 + 64 * 19 + 19);
}
