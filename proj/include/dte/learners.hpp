#pragma once

// Conditional distribution learners: each maps covariates to predicted
// probabilities P(Y <= y_j | X) for all M grid locations at once.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/nn.hpp"
#include "dte/rng.hpp"

namespace dte {

enum class LearnerType { Linear, NnSingle, NnMulti, NnMultiMonotone };

constexpr std::string_view to_string(LearnerType t) noexcept {
  switch (t) {
    case LearnerType::Linear: return "linear";
    case LearnerType::NnSingle: return "nn-single";
    case LearnerType::NnMulti: return "nn-multi";
    case LearnerType::NnMultiMonotone: return "nn-multi-monotone";
  }
  return "unknown";
}

inline LearnerType parse_learner_type(std::string_view s) {
  if (s == "linear") return LearnerType::Linear;
  if (s == "nn-single") return LearnerType::NnSingle;
  if (s == "nn-multi") return LearnerType::NnMulti;
  if (s == "nn-multi-monotone") return LearnerType::NnMultiMonotone;
  throw Error(ErrorCode::InvalidArgument, "learners", "unknown learner '" + std::string(s) + "'");
}

constexpr CdfMethod method_of(LearnerType t) noexcept {
  switch (t) {
    case LearnerType::Linear: return CdfMethod::LinearAdjusted;
    case LearnerType::NnSingle: return CdfMethod::NnSingle;
    case LearnerType::NnMulti: return CdfMethod::NnMulti;
    case LearnerType::NnMultiMonotone: return CdfMethod::NnMultiMonotone;
  }
  return CdfMethod::Empirical;
}

// Preset hyper-parameters: simulation (128/64, lr 0.01, batch 16), water
// (tanh squash, lr 0.001, batch 64), abema (16/16, lr 0.001, batch 128).
enum class Profile { Simulation, Water, Abema };

struct LearnerKind {
  LearnerType type = LearnerType::Linear;
  double ridge = 1e-8;
  bool clip_linear = false;
  std::vector<int> hidden_widths{128, 64};
  nn::Activation hidden = nn::Activation::Relu;
  nn::Increment increment = nn::Increment::Exp;
  nn::Squash squash = nn::Squash::ArctanScaled;
  nn::TrainConfig train;

  bool is_nn() const noexcept { return type != LearnerType::Linear; }

  /// Network layout for d_x inputs and M locations.
  nn::LayerSpec layer_spec(int inputs, int outputs) const {
    nn::LayerSpec spec;
    spec.widths.push_back(inputs);
    spec.widths.insert(spec.widths.end(), hidden_widths.begin(), hidden_widths.end());
    spec.widths.push_back(outputs);
    spec.hidden = hidden;
    spec.head = type == LearnerType::NnMultiMonotone ? nn::Head::monotone(increment, squash)
                                                     : nn::Head::plain();
    return spec;
  }

  void check() const {
    if (!(ridge >= 0)) throw Error(ErrorCode::InvalidArgument, "learners", "ridge must be >= 0");
    if (is_nn()) {
      train.check();
      for (int w : hidden_widths)
        if (w < 1) throw Error(ErrorCode::InvalidArgument, "learners", "hidden widths must be >= 1");
    }
  }

  static LearnerKind linear(double ridge = 1e-8) {
    LearnerKind k;
    k.type = LearnerType::Linear;
    k.ridge = ridge;
    return k;
  }

  static LearnerKind neural(LearnerType type, Profile profile = Profile::Simulation) {
    LearnerKind k;
    k.type = type;
    switch (profile) {
      case Profile::Simulation:
        k.hidden_widths = {128, 64};
        k.squash = nn::Squash::ArctanScaled;
        k.train.learning_rate = 0.01;
        k.train.batch_size = 16;
        break;
      case Profile::Water:
        k.hidden_widths = {128, 64};
        k.squash = nn::Squash::TanhHalf;
        k.train.learning_rate = 0.001;
        k.train.batch_size = 64;
        break;
      case Profile::Abema:
        k.hidden_widths = {16, 16};
        k.squash = nn::Squash::ArctanScaled;
        k.train.learning_rate = 0.001;
        k.train.batch_size = 128;
        break;
    }
    return k;
  }

  static LearnerKind from_name(std::string_view name, Profile profile = Profile::Simulation) {
    const LearnerType t = parse_learner_type(name);
    return t == LearnerType::Linear ? linear() : neural(t, profile);
  }
};

/// Column z-scoring fitted on training rows. Zero-variance columns are only
/// centred.
struct Standardizer {
  RowVector mean;
  RowVector scale;

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const auto m = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double var = (x.col(c).array() - s.mean[c]).square().sum() / m;
      const double sd = std::sqrt(var);
      s.scale[c] = sd > 0 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

struct FittedLearner {
  LearnerKind kind;
  Standardizer standardizer;
  int inputs = 0;
  int outputs = 0;
  Matrix coefficients;  // (1 + d_x) x M, intercept first; linear only
  std::vector<nn::NetworkState> networks;  // one (multi) or M (single)
  nn::LayerSpec spec;
};

namespace detail {

inline Matrix with_intercept(const Matrix& z) {
  Matrix design(z.rows(), z.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(z.cols()) = z;
  return design;
}

// Solves (D'D + ridge I) B = D'Y by Cholesky. A pivot that is negligible
// relative to the largest diagonal entry means the design is rank deficient.
inline Matrix solve_normal_equations(const Matrix& design, const Matrix& targets, double ridge) {
  Matrix gram = design.transpose() * design;
  gram.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(gram);
  const double max_diag = gram.diagonal().maxCoeff();
  const double tol = max_diag * static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon();
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Matrix l = llt.matrixL();
    for (Eigen::Index k = 0; k < l.rows(); ++k)
      if (!(l(k, k) * l(k, k) > tol)) singular = true;
  }
  if (singular)
    throw Error(ErrorCode::SingularDesign, "learners",
                "normal equations are rank deficient (ridge=" + std::to_string(ridge) + ")");
  return llt.solve(design.transpose() * targets);
}

}  // namespace detail

/// Fits the learner on m training rows with an m x M binary label matrix.
inline FittedLearner fit(const LearnerKind& kind, const Matrix& x, const Matrix& labels) {
  kind.check();
  if (x.rows() < 2)
    throw Error(ErrorCode::TooFewUnits, "learners",
                "need at least 2 training rows, got " + std::to_string(x.rows()));
  if (labels.rows() != x.rows() || labels.cols() < 1)
    throw Error(ErrorCode::ShapeMismatch, "learners", "labels shape does not match covariates");

  FittedLearner model;
  model.kind = kind;
  model.inputs = static_cast<int>(x.cols());
  model.outputs = static_cast<int>(labels.cols());
  model.standardizer = Standardizer::fit(x);
  const Matrix z = model.standardizer.apply(x);

  switch (kind.type) {
    case LearnerType::Linear:
      model.coefficients = detail::solve_normal_equations(detail::with_intercept(z), labels, kind.ridge);
      break;
    case LearnerType::NnSingle: {
      model.spec = kind.layer_spec(model.inputs, 1);
      model.networks.reserve(static_cast<std::size_t>(model.outputs));
      for (int j = 0; j < model.outputs; ++j) {
        nn::TrainConfig cfg = kind.train;
        cfg.seed = derive_seed(kind.train.seed, {static_cast<std::uint64_t>(j)});
        model.networks.push_back(nn::train(z, labels.col(j), model.spec, cfg));
      }
      break;
    }
    case LearnerType::NnMulti:
    case LearnerType::NnMultiMonotone:
      model.spec = kind.layer_spec(model.inputs, model.outputs);
      model.networks.push_back(nn::train(z, labels, model.spec, kind.train));
      break;
  }
  return model;
}

/// q x M predicted conditional CDF values. Linear predictions are unclipped
/// unless the learner asks for clipping.
inline Matrix predict(const FittedLearner& model, const Matrix& x) {
  if (x.cols() != model.inputs)
    throw Error(ErrorCode::ShapeMismatch, "learners",
                "prediction input has " + std::to_string(x.cols()) + " columns, model expects " +
                    std::to_string(model.inputs));
  const Matrix z = model.standardizer.apply(x);
  switch (model.kind.type) {
    case LearnerType::Linear: {
      Matrix out = detail::with_intercept(z) * model.coefficients;
      if (model.kind.clip_linear) out = out.cwiseMax(0.0).cwiseMin(1.0);
      return out;
    }
    case LearnerType::NnSingle: {
      Matrix out(z.rows(), model.outputs);
      for (int j = 0; j < model.outputs; ++j)
        out.col(j) = nn::forward(model.networks[static_cast<std::size_t>(j)], model.spec, z).col(0);
      return out;
    }
    case LearnerType::NnMulti:
    case LearnerType::NnMultiMonotone:
      return nn::forward(model.networks.front(), model.spec, z);
  }
  return {};
}

struct TrainingCostRow {
  int locations = 0;
  double joint_seconds = 0.0;  // one multi-output fit
  double loop_seconds = 0.0;   // M single-output fits
  double ratio = 1.0;          // joint / loop
};

/// Wall-clock cost of one joint M-output fit against M separate
/// single-output fits of the same family. `kind` selects the family: linear,
/// or a neural type (the loop then uses single-output networks with the same
/// trunk). Times are averaged over `repeats` runs.
inline std::vector<TrainingCostRow> benchmark_training_cost(const LearnerKind& kind, int m, int dim,
                                                            const std::vector<int>& locations,
                                                            std::uint64_t seed = 0, int repeats = 1) {
  if (locations.empty())
    throw Error(ErrorCode::InvalidArgument, "learners", "benchmark needs at least one M");
  if (m < 2 || dim < 1 || repeats < 1)
    throw Error(ErrorCode::InvalidArgument, "learners", "benchmark needs m >= 2, d_x >= 1, repeats >= 1");

  // Synthetic inputs: X ~ U(0,1)^d, Y = (sum X)^2 + N(0,1).
  Rng rng(derive_seed(seed, {0xBE7C}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(m, dim);
  Vector y(m);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += (x(i, c) = unif(rng));
    y[i] = s * s + noise(rng);
  }
  std::vector<double> sorted(y.data(), y.data() + m);
  std::sort(sorted.begin(), sorted.end());

  using Clock = std::chrono::steady_clock;
  auto time_fit = [&](const LearnerKind& k, const Matrix& labels) {
    const auto t0 = Clock::now();
    for (int r = 0; r < repeats; ++r) {
      auto model = fit(k, x, labels);
      (void)model;
    }
    return std::chrono::duration<double>(Clock::now() - t0).count() / repeats;
  };

  LearnerKind joint = kind;
  if (joint.type == LearnerType::NnSingle) joint.type = LearnerType::NnMulti;
  LearnerKind single = kind;
  if (single.is_nn()) single.type = LearnerType::NnSingle;

  std::vector<TrainingCostRow> rows;
  for (int count : locations) {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "learners", "M must be >= 1");
    LocationGrid grid;
    for (int j = 1; j <= count; ++j) {
      const auto idx = static_cast<std::size_t>((static_cast<double>(j) / (count + 1)) * (m - 1));
      grid.locations.push_back(sorted[idx]);
    }
    grid.check();
    const Matrix labels = indicator_labels(y, grid);

    TrainingCostRow row;
    row.locations = count;
    if (count == 1) {
      row.joint_seconds = row.loop_seconds = time_fit(joint, labels);
      row.ratio = 1.0;
    } else {
      row.joint_seconds = time_fit(joint, labels);
      if (single.is_nn()) {
        row.loop_seconds = time_fit(single, labels);  // trains M single-output nets
      } else {
        const auto t0 = Clock::now();
        for (int r = 0; r < repeats; ++r)
          for (int j = 0; j < count; ++j) {
            auto model = fit(single, x, labels.col(j));
            (void)model;
          }
        row.loop_seconds = std::chrono::duration<double>(Clock::now() - t0).count() / repeats;
      }
      row.ratio = row.joint_seconds / row.loop_seconds;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dte
