#include <catch_amalgamated.hpp>

#include "dte/estimation.hpp"
#include "dte/learners.hpp"
#include "dte/simulation.hpp"
#include "support.hpp"

using namespace dte;
using Catch::Matchers::WithinAbs;

namespace {

Matrix uniform(Rng& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

LearnerKind quick(LearnerType t, int epochs = 5) {
  LearnerKind k = LearnerKind::neural(t);
  k.hidden_widths = {16, 8};
  k.train.epochs = epochs;
  k.train.seed = 3;
  return k;
}

}  // namespace

TEST_CASE("learner names round-trip") {
  for (auto t : {LearnerType::Linear, LearnerType::NnSingle, LearnerType::NnMulti, LearnerType::NnMultiMonotone})
    CHECK(parse_learner_type(to_string(t)) == t);
  CHECK_THROWS_AS(parse_learner_type("forest"), Error);
}

TEST_CASE("profiles carry their hyper-parameters") {
  const auto sim = LearnerKind::from_name("nn-multi-monotone");
  CHECK(sim.hidden_widths == std::vector<int>{128, 64});
  CHECK(sim.train.learning_rate == 0.01);
  CHECK(sim.train.batch_size == 16);
  CHECK(sim.layer_spec(20, 19).widths == std::vector<int>{20, 128, 64, 19});
  CHECK(sim.layer_spec(20, 19).head.is_monotone());
  CHECK_FALSE(LearnerKind::from_name("nn-multi").layer_spec(20, 19).head.is_monotone());
  const auto abema = LearnerKind::from_name("nn-multi", Profile::Abema);
  CHECK(abema.hidden_widths == std::vector<int>{16, 16});
  CHECK(abema.train.batch_size == 128);
  CHECK(LearnerKind::from_name("nn-multi-monotone", Profile::Water).squash == nn::Squash::TanhHalf);
}

TEST_CASE("linear fit on constant labels") {
  Rng rng(1);
  const Matrix x = uniform(rng, 50, 3);
  Matrix labels(50, 2);
  labels.col(0).setConstant(0.3);
  labels.col(1).setConstant(1.0);
  const FittedLearner model = fit(LearnerKind::linear(0.0), x, labels);
  CHECK_THAT(model.coefficients(0, 0), WithinAbs(0.3, 1e-12));
  CHECK_THAT(model.coefficients(0, 1), WithinAbs(1.0, 1e-12));
  CHECK(model.coefficients.bottomRows(3).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix pred = predict(model, uniform(rng, 10, 3));
  CHECK((pred.col(0).array() - 0.3).abs().maxCoeff() < 1e-12);
  CHECK((pred.col(1).array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("linear fit matches the per-column least squares solution") {
  Rng rng(2);
  const Matrix x = uniform(rng, 80, 4);
  Matrix labels = (uniform(rng, 80, 3).array() < 0.5).cast<double>();
  const FittedLearner joint = fit(LearnerKind::linear(0.0), x, labels);
  Matrix design(80, 5);
  design.col(0).setOnes();
  design.rightCols(4) = x;
  for (int j = 0; j < 3; ++j) {
    const Vector beta = design.colPivHouseholderQr().solve(labels.col(j));
    const Vector fitted = design * beta;
    CHECK((predict(joint, x).col(j) - fitted).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("duplicated covariate is singular without ridge") {
  Rng rng(3);
  Matrix x = uniform(rng, 40, 3);
  x.col(2) = x.col(1);
  const Matrix labels = (uniform(rng, 40, 2).array() < 0.5).cast<double>();
  try {
    fit(LearnerKind::linear(0.0), x, labels);
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
  CHECK_NOTHROW(fit(LearnerKind::linear(1e-8), x, labels));
}

TEST_CASE("fit preconditions") {
  Rng rng(4);
  CHECK_THROWS_AS(fit(LearnerKind::linear(), uniform(rng, 1, 2), Matrix::Ones(1, 2)), Error);
  CHECK_THROWS_AS(fit(LearnerKind::linear(), uniform(rng, 5, 2), Matrix::Ones(4, 2)), Error);
  CHECK_THROWS_AS(predict(fit(LearnerKind::linear(), uniform(rng, 5, 2), Matrix::Ones(5, 1)), uniform(rng, 2, 3)),
                  Error);
}

TEST_CASE("zero-variance covariate is only centred") {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Standardizer s = Standardizer::fit(x);
  const Matrix z = s.apply(x);
  CHECK(z.col(1).isZero());
  CHECK_THAT(z.col(0).mean(), WithinAbs(0.0, 1e-15));
  CHECK_THAT(z.col(0).squaredNorm() / 4.0, WithinAbs(1.0, 1e-12));
}

TEST_CASE("neural learners produce probabilities of the right shape") {
  Rng rng(5);
  const Matrix x = uniform(rng, 60, 3);
  Matrix labels(60, 4);
  for (Eigen::Index i = 0; i < 60; ++i)
    for (int j = 0; j < 4; ++j) labels(i, j) = x(i, 0) < 0.2 * (j + 1) ? 1.0 : 0.0;
  for (auto t : {LearnerType::NnSingle, LearnerType::NnMulti, LearnerType::NnMultiMonotone}) {
    const FittedLearner model = fit(quick(t), x, labels);
    CHECK(model.networks.size() == (t == LearnerType::NnSingle ? 4u : 1u));
    const Matrix pred = predict(model, uniform(rng, 30, 3));
    CHECK(pred.rows() == 30);
    CHECK(pred.cols() == 4);
    CHECK(((pred.array() > 0) && (pred.array() < 1)).all());
    if (t == LearnerType::NnMultiMonotone)
      for (int j = 1; j < 4; ++j) CHECK((pred.col(j).array() >= pred.col(j - 1).array()).all());
  }
}

TEST_CASE("multi-task network reduces training loss on simulated data") {
  DgpConfig dgp;
  dgp.seed = 21;
  const ExperimentData data = generate(dgp);
  const LocationGrid grid = quantile_grid(data, default_quantile_levels());
  const Matrix labels = indicator_labels(data, grid);
  const LearnerKind kind = LearnerKind::from_name("nn-multi");
  const Matrix z = Standardizer::fit(data.covariates).apply(data.covariates);
  nn::TrainConfig cfg = kind.train;
  cfg.epochs = 5;
  std::vector<double> losses;
  nn::train(z, labels, kind.layer_spec(20, 19), cfg, &losses);
  CHECK(losses.back() < losses.front());
}

TEST_CASE("training cost table") {
  const auto rows = benchmark_training_cost(LearnerKind::linear(), 1000, 20, {1, 20}, 7, 20);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ratio == 1.0);
  CHECK(rows[1].locations == 20);
  CHECK(rows[1].joint_seconds < 5.0 * rows[0].joint_seconds);
  CHECK_THROWS_AS(benchmark_training_cost(LearnerKind::linear(), 1000, 20, {}, 7), Error);
}
