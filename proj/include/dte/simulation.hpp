#pragma once

// Monte-Carlo harness for the two-arm interaction design:
//   X ~ U(0,1)^d,  W ~ Bernoulli(rho),  Y = (sum_j beta_j X_j)^2 + U,  U ~ N(0, sd^2)
// with beta_j = 1 for the first d - 2 covariates and beta_j = W for the last
// two. Arm 1 is control (W = 0), arm 2 is treated (W = 1); DTE is reported as
// F_2 - F_1.

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/estimation.hpp"
#include "dte/learners.hpp"
#include "dte/rng.hpp"

namespace dte {

struct DgpConfig {
  int dim = 20;
  std::size_t n = 1000;
  double treat_prob = 0.5;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void check() const {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "simulation", "n must be >= 2");
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "simulation", "d_x must be >= 2");
    if (!(treat_prob > 0.0 && treat_prob < 1.0))
      throw Error(ErrorCode::InvalidArgument, "simulation", "treatment probability must lie in (0, 1)");
    if (!(noise_sd >= 0)) throw Error(ErrorCode::InvalidArgument, "simulation", "noise sd must be >= 0");
  }
};

/// Draws one sample. Each unit consumes d uniforms, one Bernoulli and one
/// normal in that order, so a seed fully determines the data.
inline ExperimentData generate(const DgpConfig& config) {
  config.check();
  Rng rng(derive_seed(config.seed, {0xD6F}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution treat(config.treat_prob);
  std::normal_distribution<double> noise(0.0, config.noise_sd);

  const auto n = static_cast<Eigen::Index>(config.n);
  ExperimentData data;
  data.num_arms = 2;
  data.covariates.resize(n, config.dim);
  data.outcomes.resize(n);
  data.arms.resize(config.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < config.dim; ++c) data.covariates(i, c) = unif(rng);
    const bool treated = treat(rng);
    const double u = noise(rng);
    double index = 0.0;
    for (int c = 0; c < config.dim; ++c) {
      const double beta = c < config.dim - 2 ? 1.0 : (treated ? 1.0 : 0.0);
      index += beta * data.covariates(i, c);
    }
    data.outcomes[i] = index * index + u;
    data.arms[static_cast<std::size_t>(i)] = treated ? 2 : 1;
  }
  return data;
}

struct OracleDte {
  std::vector<double> probs;
  LocationGrid grid;
  Vector dte;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string oracle_cache_path(const std::string& dir, std::uint64_t seed, std::size_t size) {
  return (std::filesystem::path(dir) / ("oracle_" + std::to_string(seed) + "_" + std::to_string(size) + ".csv"))
      .string();
}

inline std::optional<OracleDte> read_oracle_cache(const std::string& path, const std::vector<double>& probs) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  OracleDte o;
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> dte;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string q, loc, d;
    if (!std::getline(row, q, ',') || !std::getline(row, loc, ',') || !std::getline(row, d, ','))
      return std::nullopt;
    o.probs.push_back(std::stod(q));
    o.grid.locations.push_back(std::stod(loc));
    dte.push_back(std::stod(d));
  }
  if (o.probs != probs) return std::nullopt;
  o.dte = Eigen::Map<Vector>(dte.data(), static_cast<Eigen::Index>(dte.size()));
  return o;
}

inline void write_oracle_cache(const std::string& path, const OracleDte& o) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "simulation", "cannot write oracle cache " + path);
  out.precision(17);
  out << "q,location,dte\n";
  for (std::size_t j = 0; j < o.probs.size(); ++j)
    out << o.probs[j] << ',' << o.grid.locations[j] << ',' << o.dte[static_cast<Eigen::Index>(j)] << '\n';
}

}  // namespace detail

/// Ground-truth DTE from an independent large draw; the grid is that draw's
/// pooled quantiles. When `cache_dir` is non-empty the result is cached
/// there keyed by (seed, sample size).
inline OracleDte oracle_dte(const DgpConfig& config, const std::vector<double>& probs,
                            std::size_t sample_size = 100000, const std::string& cache_dir = {}) {
  const std::uint64_t oracle_seed = derive_seed(config.seed, {0x0AC1E});
  if (!cache_dir.empty()) {
    if (auto cached = detail::read_oracle_cache(detail::oracle_cache_path(cache_dir, config.seed, sample_size), probs)) {
      cached->sample_size = sample_size;
      cached->seed = config.seed;
      return *cached;
    }
  }
  DgpConfig big = config;
  big.n = sample_size;
  big.seed = oracle_seed;
  const ExperimentData data = generate(big);

  OracleDte o;
  o.probs = probs;
  o.grid = quantile_grid(data, probs);
  o.dte = dte(empirical_cdf(data, o.grid), 2, 1);
  o.sample_size = sample_size;
  o.seed = config.seed;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    detail::write_oracle_cache(detail::oracle_cache_path(cache_dir, config.seed, sample_size), o);
  }
  return o;
}

namespace detail {

// P(U_1 + ... + U_k <= x) for k i.i.d. U(0,1) (Irwin-Hall), alternating-sum
// form in extended precision.
inline double irwin_hall_cdf(int k, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= k) return 1.0;
  long double sum = 0.0L;
  long double binom = 1.0L;
  for (int j = 0; j <= static_cast<int>(std::floor(x)); ++j) {
    const long double term = binom * std::pow(static_cast<long double>(x) - j, k);
    sum += (j % 2 == 0) ? term : -term;
    binom = binom * (k - j) / (j + 1);
  }
  long double factorial = 1.0L;
  for (int j = 2; j <= k; ++j) factorial *= j;
  return static_cast<double>(std::clamp(sum / factorial, 0.0L, 1.0L));
}

// P(S_k^2 + U <= y), U ~ N(0, sd^2), by composite Simpson over the noise.
inline double outcome_cdf(int k, double noise_sd, double y) {
  auto given_noise = [&](double u) { return y - u <= 0.0 ? 0.0 : irwin_hall_cdf(k, std::sqrt(y - u)); };
  if (noise_sd == 0.0) return given_noise(0.0);
  constexpr int kIntervals = 8000;
  constexpr double kSpan = 9.0;
  const double h = 2.0 * kSpan / kIntervals;
  double acc = 0.0;
  for (int t = 0; t <= kIntervals; ++t) {
    const double z = -kSpan + t * h;
    const double weight = (t == 0 || t == kIntervals) ? 1.0 : (t % 2 == 1 ? 4.0 : 2.0);
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    acc += weight * density * given_noise(noise_sd * z);
  }
  return acc * h / 3.0;
}

}  // namespace detail

/// Population DTE (treated minus control) at the given locations, computed
/// by numerical integration rather than sampling.
inline Vector exact_dte(const DgpConfig& config, const LocationGrid& grid) {
  config.check();
  if (config.dim > 30)
    throw Error(ErrorCode::InvalidArgument, "simulation", "exact DTE supports d_x <= 30");
  Vector out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = detail::outcome_cdf(config.dim, config.noise_sd, grid[j]) -
                                        detail::outcome_cdf(config.dim - 2, config.noise_sd, grid[j]);
  return out;
}

struct MethodSpec {
  std::string name;
  std::optional<LearnerKind> learner;  // empty: empirical CDF

  static MethodSpec empirical() { return {"empirical", std::nullopt}; }
  static MethodSpec of(const LearnerKind& kind) { return {std::string(to_string(kind.type)), kind}; }
  static MethodSpec from_name(std::string_view name, Profile profile = Profile::Simulation) {
    if (name == "empirical") return empirical();
    return of(LearnerKind::from_name(name, profile));
  }
};

struct StudyConfig {
  DgpConfig dgp;
  std::vector<MethodSpec> methods;
  int reps = 100;
  int folds = 2;
  std::vector<double> probs = default_quantile_levels();
  std::size_t oracle_size = 100000;
  std::string oracle_cache_dir;
  int threads = 1;
};

struct MethodSummary {
  std::string name;
  Matrix estimates;   // S x M DTE estimates
  Matrix errors;      // S x M, estimate minus reference
  Vector bias;        // mean error
  Vector bias_mc_se;  // sd(error) / sqrt(S)
  Vector mse;
  Vector reduction_pct;  // vs empirical, 100 (1 - MSE / MSE_empirical)
  std::vector<double> fit_seconds;  // per replication

  double mean_fit_seconds() const {
    double s = 0.0;
    for (double t : fit_seconds) s += t;
    return fit_seconds.empty() ? 0.0 : s / static_cast<double>(fit_seconds.size());
  }
  double sd_fit_seconds() const {
    if (fit_seconds.size() < 2) return 0.0;
    const double mean = mean_fit_seconds();
    double ss = 0.0;
    for (double t : fit_seconds) ss += (t - mean) * (t - mean);
    return std::sqrt(ss / static_cast<double>(fit_seconds.size() - 1));
  }
};

struct SimulationReport {
  int reps = 0;
  OracleDte oracle;
  Vector reference;                     // truth the errors are measured against
  MethodSummary empirical;              // always computed: the reduction baseline
  std::vector<MethodSummary> methods;   // in StudyConfig order
  std::vector<std::uint64_t> replication_seeds;

  const MethodSummary& method(std::string_view name) const {
    if (name == "empirical") return empirical;
    for (const auto& m : methods)
      if (m.name == name) return m;
    throw Error(ErrorCode::InvalidArgument, "simulation", "no method named '" + std::string(name) + "'");
  }
};

namespace detail {

inline void summarize(MethodSummary& s, int reps, const Vector& reference, const Vector* baseline_mse) {
  s.estimates = s.estimates.topRows(reps).eval();
  s.fit_seconds.resize(static_cast<std::size_t>(reps));
  s.errors = s.estimates.rowwise() - reference.transpose();
  const Matrix& e = s.errors;
  const double S = static_cast<double>(reps);
  s.bias = e.colwise().mean().transpose();
  s.mse = e.array().square().colwise().sum().transpose() / S;
  s.bias_mc_se.resize(e.cols());
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    const double var = reps > 1 ? (e.col(j).array() - s.bias[j]).square().sum() / (S - 1.0) : 0.0;
    s.bias_mc_se[j] = std::sqrt(var / S);
  }
  s.reduction_pct = baseline_mse ? Vector(100.0 * (1.0 - s.mse.array() / baseline_mse->array()))
                                 : Vector::Zero(e.cols());
}

}  // namespace detail

/// Re-aggregates the first `reps` replications against another reference
/// DTE (e.g. the exact population DTE instead of the sampled oracle).
inline SimulationReport rescore(const SimulationReport& full, const Vector& reference, int reps) {
  if (reps < 1 || reps > full.reps)
    throw Error(ErrorCode::InvalidArgument, "simulation", "replication count out of range");
  if (reference.size() != full.reference.size())
    throw Error(ErrorCode::ShapeMismatch, "simulation", "reference has the wrong length");
  SimulationReport r = full;
  r.reps = reps;
  r.reference = reference;
  r.replication_seeds.resize(static_cast<std::size_t>(reps));
  detail::summarize(r.empirical, reps, reference, nullptr);
  for (auto& m : r.methods) detail::summarize(m, reps, reference, &r.empirical.mse);
  return r;
}

inline SimulationReport restrict_reps(const SimulationReport& full, int reps) {
  return rescore(full, full.reference, reps);
}

/// Runs S replications. Within replication s every method sees the same data
/// and fold plan. Replications may run on several threads; results are
/// stored by index and reduced serially, so the report does not depend on
/// the thread count (timings aside).
inline SimulationReport run_study(const StudyConfig& config) {
  if (config.reps < 2) throw Error(ErrorCode::InvalidArgument, "simulation", "need S >= 2 replications");
  config.dgp.check();
  for (const auto& m : config.methods)
    if (m.learner) m.learner->check();

  SimulationReport report;
  report.reps = config.reps;
  report.oracle = oracle_dte(config.dgp, config.probs, config.oracle_size, config.oracle_cache_dir);
  report.reference = report.oracle.dte;
  const LocationGrid& grid = report.oracle.grid;
  const auto m = static_cast<Eigen::Index>(grid.size());
  const std::size_t num_methods = config.methods.size();

  report.empirical.name = "empirical";
  report.empirical.estimates.resize(config.reps, m);
  report.empirical.fit_seconds.assign(static_cast<std::size_t>(config.reps), 0.0);
  for (const auto& spec : config.methods) {
    MethodSummary s;
    s.name = spec.name;
    s.estimates.resize(config.reps, m);
    s.fit_seconds.assign(static_cast<std::size_t>(config.reps), 0.0);
    report.methods.push_back(std::move(s));
  }
  for (int s = 0; s < config.reps; ++s)
    report.replication_seeds.push_back(derive_seed(config.dgp.seed, {static_cast<std::uint64_t>(s)}));

  using Clock = std::chrono::steady_clock;
  auto replicate = [&](int s) {
    const std::uint64_t rep_seed = report.replication_seeds[static_cast<std::size_t>(s)];
    DgpConfig dgp = config.dgp;
    dgp.seed = derive_seed(rep_seed, {1});
    const ExperimentData data = generate(dgp);
    const CrossFitPlan plan = make_folds(data.size(), config.folds, derive_seed(rep_seed, {2}));

    auto t0 = Clock::now();
    const CdfEstimate emp = empirical_cdf(data, grid);
    report.empirical.fit_seconds[static_cast<std::size_t>(s)] =
        std::chrono::duration<double>(Clock::now() - t0).count();
    report.empirical.estimates.row(s) = dte(emp, 2, 1).transpose();

    for (std::size_t k = 0; k < num_methods; ++k) {
      const MethodSpec& spec = config.methods[k];
      MethodSummary& out = report.methods[k];
      t0 = Clock::now();
      CdfEstimate theta;
      if (spec.learner) {
        LearnerKind kind = *spec.learner;
        kind.train.seed = derive_seed(rep_seed, {3});
        theta = estimate_adjusted(data, grid, kind, plan).theta;
      } else {
        theta = empirical_cdf(data, grid);
      }
      out.fit_seconds[static_cast<std::size_t>(s)] = std::chrono::duration<double>(Clock::now() - t0).count();
      out.estimates.row(s) = dte(theta, 2, 1).transpose();
    }
  };

  const int threads = std::clamp(config.threads, 1, config.reps);
  if (threads == 1) {
    for (int s = 0; s < config.reps; ++s) replicate(s);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(threads));
    {
      std::vector<std::jthread> pool;
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            for (int s = next++; s < config.reps; s = next++) replicate(s);
          } catch (...) {
            failures[static_cast<std::size_t>(t)] = std::current_exception();
            next = config.reps;
          }
        });
    }
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  detail::summarize(report.empirical, config.reps, report.reference, nullptr);
  for (auto& s : report.methods) detail::summarize(s, config.reps, report.reference, &report.empirical.mse);
  return report;
}

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Pooled over all entries; a prediction is positive iff it is >= 0.5.
inline ClassificationMetrics classification_metrics(const Matrix& predictions, const Matrix& labels) {
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols() || labels.size() == 0)
    throw Error(ErrorCode::ShapeMismatch, "simulation", "predictions and labels differ in shape");
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (Eigen::Index j = 0; j < labels.cols(); ++j)
    for (Eigen::Index i = 0; i < labels.rows(); ++i) {
      const bool pred = predictions(i, j) >= 0.5;
      const bool truth = labels(i, j) > 0.5;
      if (pred && truth) ++tp;
      else if (pred) ++fp;
      else if (truth) ++fn;
      else ++tn;
    }
  ClassificationMetrics out;
  out.accuracy = (tp + tn) / static_cast<double>(labels.size());
  out.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return out;
}

/// Scores each unit's own-arm cross-fitted predictions against its labels.
inline ClassificationMetrics classification_metrics(const ConditionalCdfMatrix& gamma, const ExperimentData& data,
                                                    const LocationGrid& grid) {
  const Matrix labels = indicator_labels(data, grid);
  Matrix own(labels.rows(), labels.cols());
  for (Eigen::Index i = 0; i < labels.rows(); ++i)
    own.row(i) = gamma.arm(data.arms[static_cast<std::size_t>(i)]).row(i);
  return classification_metrics(own, labels);
}

}  // namespace dte
