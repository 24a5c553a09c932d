#pragma once

#include <random>

#include "dte/core.hpp"
#include "dte/rng.hpp"

namespace dte::test {

// Small random experiment with every arm present.
inline ExperimentData random_experiment(Rng& rng, std::size_t n, int num_arms, int dim = 2) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  ExperimentData d;
  d.num_arms = num_arms;
  d.covariates.resize(static_cast<Eigen::Index>(n), dim);
  d.outcomes.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (int c = 0; c < dim; ++c) d.covariates(ii, c) = unif(rng);
    const Arm w = i < static_cast<std::size_t>(num_arms) ? static_cast<Arm>(i + 1)
                                                         : static_cast<Arm>(1 + rng() % num_arms);
    d.arms.push_back(w);
    d.outcomes[ii] = d.covariates(ii, 0) + 0.3 * w + normal(rng);
  }
  return d;
}

inline LocationGrid grid_of(std::initializer_list<double> v) { return LocationGrid{std::vector<double>(v)}; }

}  // namespace dte::test

#include <algorithm>
#include <cmath>
#include <functional>

#include "dte/nn.hpp"

namespace dte::test {

// Visits every parameter of a network as a mutable double.
inline void for_each_parameter(std::vector<nn::Layer>& layers, const std::function<void(double&, double)>& f,
                               const nn::Gradients& grads) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    for (Eigen::Index i = 0; i < layers[k].weight.size(); ++i) f(layers[k].weight.data()[i], grads[k].weight.data()[i]);
    for (Eigen::Index i = 0; i < layers[k].bias.size(); ++i) f(layers[k].bias.data()[i], grads[k].bias.data()[i]);
  }
}

// Largest relative gap between backprop and central differences. Entries
// where both are below `floor` in magnitude are compared absolutely.
inline double max_gradient_error(nn::NetworkState state, const nn::LayerSpec& spec, const Matrix& x,
                                 const Matrix& target, double step = 1e-6, double floor = 1e-7) {
  const nn::LossAndGradients lg = nn::backward(state, spec, x, target);
  double worst = 0.0;
  for_each_parameter(
      state.layers,
      [&](double& p, double analytic) {
        const double saved = p;
        p = saved + step;
        const double up = nn::bce_loss(nn::forward(state, spec, x), target);
        p = saved - step;
        const double down = nn::bce_loss(nn::forward(state, spec, x), target);
        p = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
      },
      lg.gradients);
  return worst;
}

}  // namespace dte::test
