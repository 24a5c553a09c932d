#include <catch_amalgamated.hpp>

#include <numeric>

#include "dte/estimation.hpp"
#include "dte/simulation.hpp"
#include "support.hpp"

using namespace dte;
using dte::test::grid_of;
using Catch::Matchers::WithinAbs;

namespace {

ExperimentData from_outcomes(std::vector<Arm> arms, std::vector<double> y, int k = 2) {
  ExperimentData d;
  d.num_arms = k;
  d.arms = std::move(arms);
  d.outcomes = Eigen::Map<Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.covariates.resize(static_cast<Eigen::Index>(y.size()), 1);
  for (Eigen::Index i = 0; i < d.covariates.rows(); ++i) d.covariates(i, 0) = static_cast<double>(i % 3);
  return d;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("empirical CDF hand values") {
  const auto d = from_outcomes({1, 1, 1, 2, 2, 2}, {1, 2, 3, 1, 2, 3});
  const CdfEstimate e = empirical_cdf(d, grid_of({0, 2, 10}));
  CHECK(e.values(0, 0) == 0.0);
  CHECK(e.values(0, 1) == 2.0 / 3.0);
  CHECK(e.values(0, 2) == 1.0);
  CHECK(e.row(1) == e.row(2));
}

TEST_CASE("fold sizes and determinism") {
  auto sizes = [](const CrossFitPlan& p) {
    std::vector<std::size_t> s;
    for (int f = 1; f <= p.folds; ++f) s.push_back(p.units_in(f).size());
    std::sort(s.begin(), s.end());
    return s;
  };
  CHECK(sizes(make_folds(10, 2, 1)) == std::vector<std::size_t>{5, 5});
  CHECK(sizes(make_folds(11, 2, 1)) == std::vector<std::size_t>{5, 6});
  CHECK(sizes(make_folds(11, 3, 1)) == std::vector<std::size_t>{3, 4, 4});
  CHECK(make_folds(50, 2, 9).fold_assignment == make_folds(50, 2, 9).fold_assignment);
  CHECK(make_folds(50, 2, 9).fold_assignment != make_folds(50, 2, 10).fold_assignment);
  CHECK_THROWS_AS(make_folds(10, 1, 0), Error);
  CHECK_THROWS_AS(make_folds(2, 3, 0), Error);
}

TEST_CASE("constant gamma reproduces the empirical CDF") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 2;
    const ExperimentData d = test::random_experiment(rng, 30 + 7 * trial, k);
    const LocationGrid grid = quantile_grid(d, {0.2, 0.5, 0.8});
    const CdfEstimate emp = empirical_cdf(d, grid);
    CHECK(adjusted_cdf(d, grid, ConditionalCdfMatrix::constant(d.size(), 3, k, 0.0)).theta.values == emp.values);
    const Matrix diff =
        adjusted_cdf(d, grid, ConditionalCdfMatrix::constant(d.size(), 3, k, 0.37)).theta.values - emp.values;
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("cross-fitted linear learner on constant labels") {
  // Every outcome below the grid: labels are identically one.
  Rng rng(2);
  ExperimentData d = test::random_experiment(rng, 40, 2);
  d.outcomes.setConstant(-100.0);
  const LocationGrid grid = grid_of({0, 1});
  const auto gamma = crossfit_gamma(d, grid, LearnerKind::linear(0.0), make_folds(40, 2, 5));
  for (const auto& g : gamma.predictions) CHECK((g.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("a unit's own outcome never reaches its prediction") {
  Rng rng(3);
  ExperimentData d = test::random_experiment(rng, 60, 2);
  const LocationGrid grid = quantile_grid(d, {0.25, 0.5, 0.75});
  const CrossFitPlan plan = make_folds(60, 2, 4);
  const auto base = crossfit_gamma(d, grid, LearnerKind::linear(), plan);
  for (std::size_t i : {0u, 17u, 42u}) {
    ExperimentData changed = d;
    changed.outcomes[static_cast<Eigen::Index>(i)] = d.outcomes[static_cast<Eigen::Index>(i)] > 0 ? -50.0 : 50.0;
    const auto g = crossfit_gamma(changed, grid, LearnerKind::linear(), plan);
    for (Arm w = 1; w <= 2; ++w)
      CHECK(g.arm(w).row(static_cast<Eigen::Index>(i)) == base.arm(w).row(static_cast<Eigen::Index>(i)));
  }
}

TEST_CASE("cross-fitting needs training units in every arm") {
  const auto d = from_outcomes({1, 1, 1, 1, 2, 1}, {1, 2, 3, 4, 5, 6});
  CrossFitPlan plan;
  plan.folds = 2;
  plan.fold_assignment = {1, 1, 1, 2, 2, 2};
  try {
    crossfit_gamma(d, grid_of({3}), LearnerKind::linear(), plan);
    FAIL("expected EmptyTrainingArm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTrainingArm);
  }
}

TEST_CASE("monotone cross-fitted predictions on simulated data") {
  DgpConfig dgp;
  dgp.seed = 8;
  dgp.n = 400;
  const ExperimentData d = generate(dgp);
  const LocationGrid grid = quantile_grid(d, default_quantile_levels());
  LearnerKind kind = LearnerKind::from_name("nn-multi-monotone");
  kind.train.epochs = 3;
  const auto est = estimate_adjusted(d, grid, kind, make_folds(d.size(), 2, 1));
  CHECK(est.method == CdfMethod::NnMultiMonotone);
  for (const auto& g : est.gamma.predictions) {
    CHECK(((g.array() >= 0) && (g.array() <= 1)).all());
    for (Eigen::Index j = 1; j < g.cols(); ++j) CHECK((g.col(j).array() >= g.col(j - 1).array()).all());
  }
}

TEST_CASE("true conditional CDF lowers variance") {
  // X uniform on {0, 1}; Y | X ~ N(2X, 1) in both arms; location y = 1.
  const int reps = 2000;
  const std::size_t n = 200;
  const LocationGrid grid = grid_of({1.0});
  std::vector<double> emp, adj;
  Rng rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < reps; ++r) {
    ExperimentData d;
    d.covariates.resize(static_cast<Eigen::Index>(n), 1);
    d.outcomes.resize(static_cast<Eigen::Index>(n));
    ConditionalCdfMatrix gamma = ConditionalCdfMatrix::constant(n, 1, 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double x = static_cast<double>(rng() & 1u);
      d.covariates(ii, 0) = x;
      d.arms.push_back(i < 2 ? static_cast<Arm>(i + 1) : static_cast<Arm>(1 + (rng() & 1u)));
      d.outcomes[ii] = 2.0 * x + normal(rng);
      gamma.predictions[0](ii, 0) = gamma.predictions[1](ii, 0) = normal_cdf(1.0 - 2.0 * x);
    }
    emp.push_back(empirical_cdf(d, grid).values(0, 0));
    adj.push_back(adjusted_cdf(d, grid, gamma).theta.values(0, 0));
  }
  auto variance = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
  };
  CHECK(variance(adj) < variance(emp));
}

TEST_CASE("distribution and probability treatment effects") {
  CdfEstimate t;
  t.values.resize(2, 3);
  t.values << 0.2, 0.5, 0.9, 0.2, 0.5, 0.9;
  CHECK(dte::dte(t, 2, 1).isZero());
  CHECK(pte(t, 2, 1).isZero());
  t.values.row(1) = t.values.row(0).array() + 0.1;
  CHECK((dte::dte(t, 2, 1).array() - 0.1).abs().maxCoeff() < 1e-15);

  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    CdfEstimate r;
    r.values = Matrix::Random(2, 6);
    const Vector d = dte::dte(r, 2, 1);
    const Vector p = pte(r, 2, 1);
    CHECK(p.size() == 5);
    CHECK_THAT(p.sum(), WithinAbs(d[5] - d[0], 1e-14));
    const Vector pl = pte(r, 2, 1, true);
    CHECK(pl.size() == 6);
    CHECK_THAT(pl.sum(), WithinAbs(d[5], 1e-14));
  }
  CHECK_THROWS_AS(dte::dte(t, 1, 1), Error);
  CdfEstimate one;
  one.values = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(pte(one, 2, 1), Error);
}

TEST_CASE("quantile grid convention") {
  Vector y(100);
  for (int i = 0; i < 100; ++i) y[i] = 100 - i;  // unsorted input
  CHECK(quantile_grid(y, {0.5}).locations == std::vector<double>{50});
  CHECK(quantile_grid(y, {0.01, 0.999}).locations == std::vector<double>{1, 100});
  CHECK(quantile_grid(y, default_quantile_levels()).size() == 19);
  CHECK(quantile_grid(y, default_quantile_levels())[2] == 15);
  CHECK_THROWS_AS(quantile_grid(y, {0.5, 0.2}), Error);
  CHECK_THROWS_AS(quantile_grid(y, {0.0}), Error);
  CHECK_THROWS_AS(quantile_grid(Vector::Constant(10, 1.0), {0.2, 0.5}), Error);
}

TEST_CASE("empirical and adjusted PTE agree in sign where the effect is clear") {
  DgpConfig dgp;
  dgp.seed = 12;
  const ExperimentData d = generate(dgp);
  const LocationGrid grid = quantile_grid(d, default_quantile_levels());
  const Vector truth = exact_dte(dgp, grid);
  const Vector truth_pte = truth.tail(18) - truth.head(18);
  const auto emp = estimate_empirical(d, grid);
  const auto adj = estimate_adjusted(d, grid, LearnerKind::linear(), make_folds(d.size(), 2, 3));
  const Vector pe = pte(emp.theta, 2, 1);
  const Vector pa = pte(adj.theta, 2, 1);
  int compared = 0;
  for (Eigen::Index j = 4; j < 14; ++j) {
    if (std::abs(truth_pte[j]) < 0.01) continue;
    ++compared;
    CHECK(pe[j] * pa[j] > 0);
  }
  CHECK(compared >= 4);
}
