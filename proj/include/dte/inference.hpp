#pragma once

// Multiplier-bootstrap pointwise confidence bands.
//
// Moment function for arm w at location y:
//   psi(Z) = 1{W = w} (1{Y <= y} - gamma(X)) / pi_w + gamma(X) - theta
// Bootstrap draw b perturbs theta by (1/n) sum_i xi_i psi(Z_i) with
//   xi = m1 / sqrt(2) + (m2^2 - 1) / 2,   m1, m2 ~ N(0, 1) independent.

#include <Eigen/Dense>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/estimation.hpp"
#include "dte/rng.hpp"

namespace dte {

/// psi evaluated at every unit: n x (K * M), column (w - 1) * M + j holds
/// arm w at location j.
struct InfluenceMatrix {
  Matrix psi;
  int num_arms = 0;
  Eigen::Index num_locations = 0;

  Eigen::Index column(Arm w, Eigen::Index j) const { return (w - 1) * num_locations + j; }
  auto arm(Arm w) const { return psi.middleCols((w - 1) * num_locations, num_locations); }
};

inline InfluenceMatrix influence(const ExperimentData& data, const LocationGrid& grid, const CdfEstimate& theta,
                                 const ConditionalCdfMatrix& gamma, const ArmStats& stats) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (theta.num_arms() != data.num_arms || theta.num_locations() != m)
    throw Error(ErrorCode::ShapeMismatch, "inference", "theta is not K x M");
  if (gamma.predictions.size() != static_cast<std::size_t>(data.num_arms))
    throw Error(ErrorCode::ShapeMismatch, "inference", "gamma must hold one matrix per arm");
  if (stats.shares.size() != static_cast<std::size_t>(data.num_arms))
    throw Error(ErrorCode::ShapeMismatch, "inference", "arm stats do not match the data");

  InfluenceMatrix out;
  out.num_arms = data.num_arms;
  out.num_locations = m;
  out.psi.resize(n, data.num_arms * m);
  for (Arm w = 1; w <= data.num_arms; ++w) {
    const Matrix& g = gamma.arm(w);
    if (g.rows() != n || g.cols() != m)
      throw Error(ErrorCode::ShapeMismatch, "inference", "gamma matrix is not n x M");
    const double share = stats.share(w);
    if (!(share > 0)) throw Error(ErrorCode::EmptyArm, "inference", "arm share must be positive");
    for (Eigen::Index j = 0; j < m; ++j) {
      const double y = grid[static_cast<std::size_t>(j)];
      const double th = theta.values(w - 1, j);
      const Eigen::Index col = out.column(w, j);
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = g(i, j) - th;
        if (data.arms[static_cast<std::size_t>(i)] == w)
          v += ((data.outcomes[i] <= y ? 1.0 : 0.0) - g(i, j)) / share;
        out.psi(i, col) = v;
      }
    }
  }
  return out;
}

inline InfluenceMatrix influence(const ExperimentData& data, const LocationGrid& grid,
                                 const AdjustedEstimate& estimate) {
  return influence(data, grid, estimate.theta, estimate.gamma, validate_experiment(data, grid));
}

constexpr double multiplier_from_normals(double m1, double m2) noexcept {
  return m1 / std::numbers::sqrt2 + (m2 * m2 - 1.0) / 2.0;
}

namespace detail {
inline void fill_multipliers(Rng& rng, double* out, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double m1 = normal(rng);
    const double m2 = normal(rng);
    out[i] = multiplier_from_normals(m1, m2);
  }
}
}  // namespace detail

/// n i.i.d. multipliers with mean 0 and variance 1.
inline Vector multipliers(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "inference", "need n >= 1 multipliers");
  Vector xi(static_cast<Eigen::Index>(n));
  Rng rng(derive_seed(seed, {0x3E1}));
  detail::fill_multipliers(rng, xi.data(), n);
  return xi;
}

/// The functional applied to each bootstrap draw of theta.
struct Functional {
  EffectKind kind = EffectKind::Dte;
  ArmPair arms;                 // for Cdf only `arms.first` is used
  bool pte_lower_boundary = false;

  static Functional cdf(Arm w) { return {EffectKind::Cdf, {w, w}, false}; }
  static Functional dte(Arm w, Arm w_prime) { return {EffectKind::Dte, {w, w_prime}, false}; }
  static Functional pte(Arm w, Arm w_prime, bool lower_boundary = false) {
    return {EffectKind::Pte, {w, w_prime}, lower_boundary};
  }

  Vector apply(const CdfEstimate& theta) const {
    switch (kind) {
      case EffectKind::Cdf:
        if (arms.first < 1 || arms.first > theta.num_arms())
          throw Error(ErrorCode::InvalidArgument, "inference", "arm outside 1..K");
        return theta.row(arms.first).transpose();
      case EffectKind::Dte: return dte::dte(theta, arms.first, arms.second);
      case EffectKind::Pte: return dte::pte(theta, arms.first, arms.second, pte_lower_boundary);
    }
    return {};
  }

  // Grid location attached to each output entry.
  std::vector<double> locations(const LocationGrid& grid) const {
    if (kind == EffectKind::Pte && !pte_lower_boundary)
      return {grid.locations.begin() + 1, grid.locations.end()};
    return grid.locations;
  }
};

enum class CriticalValue {
  TwoSided,  // z_{1 - alpha/2}
  Literal,   // z_{1 - alpha}
};

struct BootstrapOptions {
  int repetitions = 5000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  CriticalValue critical = CriticalValue::TwoSided;
  bool allow_degenerate = true;  // false: throw DegenerateDraws when every draw is identical
  int threads = 1;
};

struct BootstrapDraws {
  int repetitions = 0;
  Matrix draws;  // B x output-dim
  std::uint64_t seed = 0;
};

/// phi(theta^b) for b = 1..B. Draw b uses its own generator stream derived
/// from (seed, b), so the result does not depend on `threads`.
inline BootstrapDraws bootstrap_draws(const InfluenceMatrix& psi, const CdfEstimate& theta,
                                      const Functional& functional, const BootstrapOptions& opts) {
  if (opts.repetitions < 2)
    throw Error(ErrorCode::InvalidArgument, "inference", "need B >= 2 bootstrap repetitions");
  const Eigen::Index n = psi.psi.rows();
  const Eigen::Index km = psi.psi.cols();
  if (n < 1 || km != theta.values.size())
    throw Error(ErrorCode::ShapeMismatch, "inference", "influence matrix does not match theta");

  const Eigen::Index out_dim = functional.apply(theta).size();
  const int reps = opts.repetitions;
  BootstrapDraws result;
  result.repetitions = reps;
  result.seed = opts.seed;
  result.draws.resize(reps, out_dim);

  constexpr int kChunk = 128;
  const int chunks = (reps + kChunk - 1) / kChunk;
  auto run_chunk = [&](int c) {
    const int b0 = c * kChunk;
    const int len = std::min(kChunk, reps - b0);
    Matrix xi(n, len);
    for (int b = 0; b < len; ++b) {
      Rng rng(derive_seed(opts.seed, {0xB007, static_cast<std::uint64_t>(b0 + b)}));
      detail::fill_multipliers(rng, xi.col(b).data(), static_cast<std::size_t>(n));
    }
    const Matrix shift = (psi.psi.transpose() * xi) / static_cast<double>(n);  // KM x len
    CdfEstimate perturbed = theta;
    for (int b = 0; b < len; ++b) {
      for (Eigen::Index w = 0; w < theta.num_arms(); ++w)
        for (Eigen::Index j = 0; j < theta.num_locations(); ++j)
          perturbed.values(w, j) = theta.values(w, j) + shift(w * theta.num_locations() + j, b);
      result.draws.row(b0 + b) = functional.apply(perturbed).transpose();
    }
  };

  const int threads = std::clamp(opts.threads, 1, std::max(1, chunks));
  if (threads == 1) {
    for (int c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int c = t; c < chunks; c += threads) run_chunk(c);
      });
  }
  if (!result.draws.allFinite())
    throw Error(ErrorCode::NonFiniteValue, "inference", "bootstrap draws contain non-finite values");
  return result;
}

inline double critical_value(double alpha, CriticalValue kind) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "inference", "alpha must lie in (0, 1)");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, kind == CriticalValue::TwoSided ? 1.0 - alpha / 2.0 : 1.0 - alpha);
}

/// Pointwise band phi(theta) +/- z * SE with SE the bootstrap standard
/// deviation of the draws.
inline EffectBand band_from_draws(const BootstrapDraws& draws, const Vector& point, const Functional& functional,
                                  const std::vector<double>& locations, const BootstrapOptions& opts) {
  const double z = critical_value(opts.alpha, opts.critical);
  const Eigen::Index dim = point.size();
  EffectBand band;
  band.kind = functional.kind;
  band.arms = functional.arms;
  band.alpha = opts.alpha;
  band.locations = locations;
  band.point = point;
  band.se.resize(dim);

  const double reps = static_cast<double>(draws.repetitions);
  bool degenerate = true;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const auto col = draws.draws.col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (reps - 1.0);
    band.se[j] = std::sqrt(var);
    if (col.maxCoeff() != col.minCoeff()) degenerate = false;
  }
  if (degenerate && !opts.allow_degenerate)
    throw Error(ErrorCode::DegenerateDraws, "inference", "all bootstrap draws are identical (psi is zero)");
  band.ci_lo = point - z * band.se;
  band.ci_hi = point + z * band.se;
  return band;
}

inline EffectBand bootstrap_band(const InfluenceMatrix& psi, const CdfEstimate& theta, const LocationGrid& grid,
                                 const Functional& functional, const BootstrapOptions& opts) {
  const BootstrapDraws draws = bootstrap_draws(psi, theta, functional, opts);
  return band_from_draws(draws, functional.apply(theta), functional, functional.locations(grid), opts);
}

inline EffectBand bootstrap_band(const ExperimentData& data, const LocationGrid& grid,
                                 const AdjustedEstimate& estimate, const Functional& functional,
                                 const BootstrapOptions& opts) {
  return bootstrap_band(influence(data, grid, estimate), estimate.theta, grid, functional, opts);
}

/// 100 * (1 - SE_adjusted / SE_empirical) per location.
inline Vector se_reduction(const EffectBand& empirical, const EffectBand& adjusted) {
  if (empirical.se.size() != adjusted.se.size() || empirical.kind != adjusted.kind)
    throw Error(ErrorCode::ShapeMismatch, "inference", "bands cover different functionals or grids");
  Vector out(empirical.se.size());
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (!(empirical.se[j] > 0))
      throw Error(ErrorCode::ZeroBaselineSE, "inference",
                  "baseline SE is zero at entry " + std::to_string(j));
    out[j] = 100.0 * (1.0 - adjusted.se[j] / empirical.se[j]);
  }
  return out;
}

}  // namespace dte
