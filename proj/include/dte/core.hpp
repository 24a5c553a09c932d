#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dte/error.hpp"

namespace dte {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Arm labels are contiguous integers 1..K.
using Arm = int;

struct ArmPair {
  Arm first = 2;
  Arm second = 1;
};

/// Randomized-experiment sample: n units with covariates, assigned arm and
/// observed outcome.
struct ExperimentData {
  Matrix covariates;       // n x d_x
  std::vector<Arm> arms;   // length n, values in 1..num_arms
  Vector outcomes;         // length n
  int num_arms = 2;

  std::size_t size() const noexcept { return arms.size(); }
  Eigen::Index dim() const noexcept { return covariates.cols(); }
};

struct ArmStats {
  std::vector<std::size_t> counts;
  std::vector<double> shares;

  std::size_t count(Arm w) const { return counts.at(static_cast<std::size_t>(w - 1)); }
  double share(Arm w) const { return shares.at(static_cast<std::size_t>(w - 1)); }
};

/// Sorted evaluation points at which CDFs and effects are reported.
struct LocationGrid {
  std::vector<double> locations;

  std::size_t size() const noexcept { return locations.size(); }
  double operator[](std::size_t j) const { return locations[j]; }

  void check() const {
    if (locations.empty())
      throw Error(ErrorCode::GridTooSmall, "core", "grid has no locations");
    for (std::size_t j = 0; j < locations.size(); ++j) {
      if (!std::isfinite(locations[j]))
        throw Error(ErrorCode::NonFiniteValue, "core",
                    "grid location " + std::to_string(j) + " is not finite");
      if (j > 0 && !(locations[j] > locations[j - 1]))
        throw Error(ErrorCode::UnsortedGrid, "core",
                    "grid is not strictly increasing at index " + std::to_string(j));
    }
  }
};

enum class CdfMethod { Empirical, LinearAdjusted, NnSingle, NnMulti, NnMultiMonotone };

constexpr std::string_view to_string(CdfMethod m) noexcept {
  switch (m) {
    case CdfMethod::Empirical: return "empirical";
    case CdfMethod::LinearAdjusted: return "linear";
    case CdfMethod::NnSingle: return "nn-single";
    case CdfMethod::NnMulti: return "nn-multi";
    case CdfMethod::NnMultiMonotone: return "nn-multi-monotone";
  }
  return "unknown";
}

/// Per-arm CDF values over the grid: row w-1 holds arm w.
struct CdfEstimate {
  Matrix values;  // K x M
  CdfMethod method = CdfMethod::Empirical;

  Eigen::Index num_arms() const noexcept { return values.rows(); }
  Eigen::Index num_locations() const noexcept { return values.cols(); }
  auto row(Arm w) const { return values.row(w - 1); }
};

/// Cross-fitted conditional CDF predictions gamma_y^(w)(X_i), one n x M matrix
/// per arm, together with the fold each unit was held out in.
struct ConditionalCdfMatrix {
  std::vector<Matrix> predictions;  // K entries, each n x M
  std::vector<int> fold_assignment; // length n, values in 1..L

  const Matrix& arm(Arm w) const { return predictions.at(static_cast<std::size_t>(w - 1)); }

  static ConditionalCdfMatrix constant(std::size_t n, std::size_t m, int num_arms, double c) {
    ConditionalCdfMatrix out;
    out.predictions.assign(static_cast<std::size_t>(num_arms),
                           Matrix::Constant(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m), c));
    out.fold_assignment.assign(n, 1);
    return out;
  }
};

enum class EffectKind { Cdf, Dte, Pte };

constexpr std::string_view to_string(EffectKind k) noexcept {
  switch (k) {
    case EffectKind::Cdf: return "cdf";
    case EffectKind::Dte: return "dte";
    case EffectKind::Pte: return "pte";
  }
  return "unknown";
}

struct EffectBand {
  EffectKind kind = EffectKind::Dte;
  ArmPair arms;
  std::vector<double> locations;  // location attached to each entry
  Vector point;
  Vector se;
  Vector ci_lo;
  Vector ci_hi;
  double alpha = 0.05;

  Eigen::Index size() const noexcept { return point.size(); }
};

/// Checks every ExperimentData invariant and the grid ordering; returns the
/// per-arm counts and assignment shares.
inline ArmStats validate_experiment(const ExperimentData& data, const LocationGrid& grid) {
  const std::size_t n = data.arms.size();
  if (n < 2) throw Error(ErrorCode::TooFewUnits, "core", "need n >= 2, got " + std::to_string(n));
  if (static_cast<std::size_t>(data.outcomes.size()) != n ||
      static_cast<std::size_t>(data.covariates.rows()) != n)
    throw Error(ErrorCode::ShapeMismatch, "core",
                "covariates/arms/outcomes lengths differ (" +
                    std::to_string(data.covariates.rows()) + "/" + std::to_string(n) + "/" +
                    std::to_string(data.outcomes.size()) + ")");
  if (data.num_arms < 1)
    throw Error(ErrorCode::InvalidArgument, "core", "num_arms must be >= 1");
  if (!data.covariates.allFinite())
    throw Error(ErrorCode::NonFiniteValue, "core", "covariates contain non-finite values");
  if (!data.outcomes.allFinite())
    throw Error(ErrorCode::NonFiniteValue, "core", "outcomes contain non-finite values");

  ArmStats stats;
  stats.counts.assign(static_cast<std::size_t>(data.num_arms), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Arm w = data.arms[i];
    if (w < 1 || w > data.num_arms)
      throw Error(ErrorCode::InvalidArgument, "core",
                  "arm label " + std::to_string(w) + " at unit " + std::to_string(i) +
                      " outside 1.." + std::to_string(data.num_arms));
    ++stats.counts[static_cast<std::size_t>(w - 1)];
  }
  for (std::size_t w = 0; w < stats.counts.size(); ++w)
    if (stats.counts[w] == 0)
      throw Error(ErrorCode::EmptyArm, "core", "arm " + std::to_string(w + 1) + " has no units");

  grid.check();

  stats.shares.reserve(stats.counts.size());
  for (std::size_t c : stats.counts)
    stats.shares.push_back(static_cast<double>(c) / static_cast<double>(n));
  return stats;
}

/// Binary matrix with entry (i, j) = 1 iff Y_i <= y_j.
inline Matrix indicator_labels(const Vector& outcomes, const LocationGrid& grid) {
  const auto n = outcomes.size();
  const auto m = static_cast<Eigen::Index>(grid.size());
  Matrix labels(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      labels(i, j) = outcomes[i] <= grid[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  return labels;
}

inline Matrix indicator_labels(const ExperimentData& data, const LocationGrid& grid) {
  return indicator_labels(data.outcomes, grid);
}

/// Rows of `data` belonging to the given unit indices.
inline ExperimentData subset(const ExperimentData& data, const std::vector<std::size_t>& idx) {
  ExperimentData out;
  out.num_arms = data.num_arms;
  out.covariates.resize(static_cast<Eigen::Index>(idx.size()), data.covariates.cols());
  out.outcomes.resize(static_cast<Eigen::Index>(idx.size()));
  out.arms.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(idx[r]);
    out.covariates.row(static_cast<Eigen::Index>(r)) = data.covariates.row(i);
    out.outcomes[static_cast<Eigen::Index>(r)] = data.outcomes[i];
    out.arms.push_back(data.arms[idx[r]]);
  }
  return out;
}

}  // namespace dte
