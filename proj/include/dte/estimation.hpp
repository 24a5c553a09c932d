#pragma once

// Empirical and regression-adjusted CDF estimators, L-fold cross-fitting, and
// the DTE / PTE contrasts built on them.
//
// The adjusted estimator for arm w at location y is
//
//   F(y) = 1/n_w * sum_{i: W_i = w} (1{Y_i <= y} - gamma(X_i))
//        + 1/n   * sum_{i}            gamma(X_i)
//
// where gamma(X_i) always comes from a model that never saw unit i.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/learners.hpp"
#include "dte/rng.hpp"

namespace dte {

struct CrossFitPlan {
  int folds = 2;
  std::vector<int> fold_assignment;  // length n, values in 1..folds
  std::uint64_t seed = 0;

  std::vector<std::size_t> units_in(int fold) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < fold_assignment.size(); ++i)
      if (fold_assignment[i] == fold) idx.push_back(i);
    return idx;
  }
};

struct AdjustedEstimate {
  CdfEstimate theta;
  ConditionalCdfMatrix gamma;
  CrossFitPlan plan;
  CdfMethod method = CdfMethod::Empirical;
};

/// Per-arm share of units with Y <= y_j.
inline CdfEstimate empirical_cdf(const ExperimentData& data, const LocationGrid& grid) {
  const ArmStats stats = validate_experiment(data, grid);
  const auto m = static_cast<Eigen::Index>(grid.size());
  CdfEstimate est;
  est.method = CdfMethod::Empirical;
  est.values = Matrix::Zero(data.num_arms, m);

  // Integer counts keep every entry exactly k / n_w.
  std::vector<std::vector<std::size_t>> hits(static_cast<std::size_t>(data.num_arms),
                                             std::vector<std::size_t>(grid.size(), 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = data.outcomes[static_cast<Eigen::Index>(i)];
    auto& row = hits[static_cast<std::size_t>(data.arms[i] - 1)];
    const auto first = std::lower_bound(grid.locations.begin(), grid.locations.end(), y);
    for (auto it = first; it != grid.locations.end(); ++it)
      ++row[static_cast<std::size_t>(it - grid.locations.begin())];
  }
  for (Arm w = 1; w <= data.num_arms; ++w)
    for (Eigen::Index j = 0; j < m; ++j)
      est.values(w - 1, j) = static_cast<double>(hits[static_cast<std::size_t>(w - 1)][static_cast<std::size_t>(j)]) /
                             static_cast<double>(stats.count(w));
  return est;
}

/// Seeded random partition of n units into L folds whose sizes differ by at
/// most one.
inline CrossFitPlan make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2)
    throw Error(ErrorCode::InvalidArgument, "estimation", "need L >= 2 folds, got " + std::to_string(folds));
  if (n < static_cast<std::size_t>(folds))
    throw Error(ErrorCode::TooFewUnits, "estimation",
                "n=" + std::to_string(n) + " < L=" + std::to_string(folds));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {0xF01D}));
  std::shuffle(order.begin(), order.end(), rng);

  CrossFitPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  plan.fold_assignment.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos)
    plan.fold_assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds)) + 1;
  return plan;
}

/// Cross-fitted conditional CDF predictions. For every arm w and fold l, the
/// learner is trained on arm-w units outside fold l and predicts every unit
/// (of any arm) inside fold l.
inline ConditionalCdfMatrix crossfit_gamma(const ExperimentData& data, const LocationGrid& grid,
                                           const LearnerKind& kind, const CrossFitPlan& plan) {
  validate_experiment(data, grid);
  if (plan.fold_assignment.size() != data.size())
    throw Error(ErrorCode::ShapeMismatch, "estimation", "fold plan does not cover the sample");

  const Matrix labels = indicator_labels(data, grid);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = static_cast<Eigen::Index>(grid.size());

  ConditionalCdfMatrix gamma;
  gamma.fold_assignment = plan.fold_assignment;
  gamma.predictions.assign(static_cast<std::size_t>(data.num_arms), Matrix::Zero(n, m));

  for (Arm w = 1; w <= data.num_arms; ++w) {
    for (int fold = 1; fold <= plan.folds; ++fold) {
      std::vector<Eigen::Index> train_idx, test_idx;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (plan.fold_assignment[static_cast<std::size_t>(i)] == fold)
          test_idx.push_back(i);
        else if (data.arms[static_cast<std::size_t>(i)] == w)
          train_idx.push_back(i);
      }
      if (train_idx.size() < 2)
        throw Error(ErrorCode::EmptyTrainingArm, "estimation",
                    "arm " + std::to_string(w) + " has " + std::to_string(train_idx.size()) +
                        " training units outside fold " + std::to_string(fold));
      if (test_idx.empty()) continue;

      LearnerKind k = kind;
      k.train.seed = derive_seed(kind.train.seed ^ plan.seed,
                                 {static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(fold)});
      const FittedLearner model = fit(k, data.covariates(train_idx, Eigen::all), labels(train_idx, Eigen::all));
      const Matrix pred = predict(model, data.covariates(test_idx, Eigen::all));
      gamma.predictions[static_cast<std::size_t>(w - 1)](test_idx, Eigen::all) = pred;
    }
  }
  return gamma;
}

/// Regression-adjusted CDF from cross-fitted predictions. No range or
/// monotonicity correction is applied.
inline CdfEstimate adjusted_cdf_values(const ExperimentData& data, const LocationGrid& grid,
                                       const ConditionalCdfMatrix& gamma) {
  const ArmStats stats = validate_experiment(data, grid);
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (gamma.predictions.size() != static_cast<std::size_t>(data.num_arms))
    throw Error(ErrorCode::ShapeMismatch, "estimation", "gamma must hold one matrix per arm");
  for (const auto& p : gamma.predictions)
    if (p.rows() != n || p.cols() != m)
      throw Error(ErrorCode::ShapeMismatch, "estimation", "gamma matrix is not n x M");

  CdfEstimate est;
  est.values.resize(data.num_arms, m);
  for (Arm w = 1; w <= data.num_arms; ++w) {
    const Matrix& g = gamma.arm(w);
    const auto nw = static_cast<double>(stats.count(w));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double y = grid[static_cast<std::size_t>(j)];
      double arm_residual = 0.0;
      double overall = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (data.arms[static_cast<std::size_t>(i)] == w)
          arm_residual += (data.outcomes[i] <= y ? 1.0 : 0.0) - g(i, j);
        overall += g(i, j);
      }
      est.values(w - 1, j) = arm_residual / nw + overall / static_cast<double>(n);
    }
  }
  return est;
}

inline AdjustedEstimate adjusted_cdf(const ExperimentData& data, const LocationGrid& grid,
                                     ConditionalCdfMatrix gamma, CdfMethod method = CdfMethod::LinearAdjusted) {
  AdjustedEstimate out;
  out.theta = adjusted_cdf_values(data, grid, gamma);
  out.theta.method = method;
  out.method = method;
  out.plan.fold_assignment = gamma.fold_assignment;
  out.plan.folds = gamma.fold_assignment.empty()
                       ? 0
                       : *std::max_element(gamma.fold_assignment.begin(), gamma.fold_assignment.end());
  out.gamma = std::move(gamma);
  return out;
}

/// Cross-fit the learner and apply the adjustment.
inline AdjustedEstimate estimate_adjusted(const ExperimentData& data, const LocationGrid& grid,
                                          const LearnerKind& kind, const CrossFitPlan& plan) {
  AdjustedEstimate out = adjusted_cdf(data, grid, crossfit_gamma(data, grid, kind, plan), method_of(kind.type));
  out.plan = plan;
  return out;
}

/// The empirical estimator expressed as the adjusted estimator with
/// gamma = 0, so that inference treats both uniformly.
inline AdjustedEstimate estimate_empirical(const ExperimentData& data, const LocationGrid& grid) {
  AdjustedEstimate out;
  out.theta = empirical_cdf(data, grid);
  out.gamma = ConditionalCdfMatrix::constant(data.size(), grid.size(), data.num_arms, 0.0);
  out.method = CdfMethod::Empirical;
  return out;
}

inline void check_arm_pair(Eigen::Index num_arms, Arm w, Arm w_prime) {
  if (w == w_prime)
    throw Error(ErrorCode::SameArm, "estimation", "contrast needs two distinct arms, got " + std::to_string(w) + " twice");
  if (w < 1 || w_prime < 1 || w > num_arms || w_prime > num_arms)
    throw Error(ErrorCode::InvalidArgument, "estimation", "arm outside 1.." + std::to_string(num_arms));
}

/// F_w(y) - F_w'(y) at every grid location.
inline Vector dte(const CdfEstimate& theta, Arm w, Arm w_prime) {
  check_arm_pair(theta.num_arms(), w, w_prime);
  return (theta.row(w) - theta.row(w_prime)).transpose();
}

/// Consecutive differences of a CDF row. With `lower_boundary` the first
/// interval is (-inf, y_1], giving M entries; otherwise M - 1.
inline Vector interval_probabilities(const Eigen::Ref<const RowVector>& cdf, bool lower_boundary = false) {
  const Eigen::Index m = cdf.size();
  if (m < 2 && !lower_boundary)
    throw Error(ErrorCode::GridTooSmall, "estimation", "PTE needs at least 2 locations");
  if (lower_boundary) {
    Vector out(m);
    out[0] = cdf[0];
    for (Eigen::Index j = 1; j < m; ++j) out[j] = cdf[j] - cdf[j - 1];
    return out;
  }
  Vector out(m - 1);
  for (Eigen::Index j = 1; j < m; ++j) out[j - 1] = cdf[j] - cdf[j - 1];
  return out;
}

/// Arm difference of interval probabilities between consecutive locations.
inline Vector pte(const CdfEstimate& theta, Arm w, Arm w_prime, bool lower_boundary = false) {
  check_arm_pair(theta.num_arms(), w, w_prime);
  if (theta.num_locations() < 2)
    throw Error(ErrorCode::GridTooSmall, "estimation", "PTE needs at least 2 locations");
  return interval_probabilities(theta.row(w), lower_boundary) -
         interval_probabilities(theta.row(w_prime), lower_boundary);
}

/// Pooled lower empirical quantiles (inverse CDF): the k-th order statistic
/// with k = ceil(n q).
inline LocationGrid quantile_grid(const Vector& outcomes, const std::vector<double>& probs) {
  if (probs.empty()) throw Error(ErrorCode::GridTooSmall, "estimation", "no quantile levels given");
  if (outcomes.size() == 0) throw Error(ErrorCode::TooFewUnits, "estimation", "no outcomes");
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!(probs[k] > 0.0 && probs[k] < 1.0))
      throw Error(ErrorCode::InvalidArgument, "estimation", "quantile levels must lie in (0, 1)");
    if (k > 0 && !(probs[k] > probs[k - 1]))
      throw Error(ErrorCode::UnsortedGrid, "estimation", "quantile levels must be strictly increasing");
  }
  std::vector<double> sorted(outcomes.data(), outcomes.data() + outcomes.size());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());

  LocationGrid grid;
  for (double q : probs) {
    // The small slack keeps e.g. 1000 * 0.15 from rounding up to 151.
    auto k = static_cast<std::size_t>(std::ceil(n * q - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    const double loc = sorted[k - 1];
    if (!grid.locations.empty() && !(loc > grid.locations.back()))
      throw Error(ErrorCode::DuplicateLocation, "estimation",
                  "quantile level " + std::to_string(q) + " maps to an existing location");
    grid.locations.push_back(loc);
  }
  return grid;
}

inline LocationGrid quantile_grid(const ExperimentData& data, const std::vector<double>& probs) {
  return quantile_grid(data.outcomes, probs);
}

/// {0.05, 0.10, ..., 0.95}
inline std::vector<double> default_quantile_levels() {
  std::vector<double> q;
  for (int k = 1; k <= 19; ++k) q.push_back(0.05 * k);
  return q;
}

}  // namespace dte
