#pragma once

// Run configuration, config-file parsing and the mode dispatcher behind the
// `dte` command-line tool.
//
// Config files are either flat key-value text with [section] headers or a
// JSON manifest previously written by a run. Both map to the same dotted
// keys (e.g. "learner.epochs"); command-line flags override file values.

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dte/core.hpp"
#include "dte/error.hpp"
#include "dte/estimation.hpp"
#include "dte/inference.hpp"
#include "dte/io.hpp"
#include "dte/learners.hpp"
#include "dte/simulation.hpp"

namespace dte::cli {

using json = nlohmann::ordered_json;

enum class Mode { Simulate, Estimate, BootstrapBand, Benchmark };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Simulate: return "simulate";
    case Mode::Estimate: return "estimate";
    case Mode::BootstrapBand: return "bootstrap-band";
    case Mode::Benchmark: return "benchmark";
  }
  return "unknown";
}

// Invalid flag or config value; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Mode parse_mode(std::string_view s) {
  if (s == "simulate") return Mode::Simulate;
  if (s == "estimate") return Mode::Estimate;
  if (s == "bootstrap-band") return Mode::BootstrapBand;
  if (s == "benchmark") return Mode::Benchmark;
  throw UsageError("unknown mode '" + std::string(s) + "'");
}

struct RunConfig {
  Mode mode = Mode::Simulate;

  // learner
  std::string learner = "nn-multi-monotone";
  std::string profile = "simulation";
  int epochs = 30;
  double learning_rate = 0;  // 0: profile default
  int batch_size = 0;        // 0: profile default
  double ridge = 1e-8;

  // estimation / inference
  int folds = 2;
  std::string grid = "quantiles";
  int bootstrap = 5000;
  double alpha = 0.05;
  std::string critical = "two-sided";
  std::string functional = "dte";
  int arm = 2;
  int baseline_arm = 1;
  bool pte_lower_boundary = false;
  std::uint64_t seed = 0;
  int threads = 1;

  // data
  std::string input;
  std::string covariates;  // comma separated; empty = all other columns
  std::string arm_column = "arm";
  std::string outcome_column = "outcome";

  // simulation
  std::size_t n = 1000;
  int reps = 10;
  std::string methods = "empirical,linear,nn-multi,nn-multi-monotone";
  std::size_t oracle_n = 100000;

  // benchmark
  int bench_reps = 3;
  std::string bench_locations = "1,5,10,19";

  std::string out = "dte-out";  // not recorded in the manifest
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto t = io::detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  const auto d = io::detail::parse_number(v);
  if (!d) throw UsageError("config key '" + key + "': '" + v + "' is not a number");
  return *d;
}

inline long long to_integer(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw UsageError("config key '" + key + "': '" + v + "' is not an integer");
  return static_cast<long long>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace detail

/// Applies one dotted key to the config.
inline void apply(RunConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "run.mode") c.mode = parse_mode(v);
  else if (key == "learner.name") c.learner = v;
  else if (key == "learner.profile") c.profile = v;
  else if (key == "learner.epochs") c.epochs = static_cast<int>(to_integer(key, v));
  else if (key == "learner.learning_rate") c.learning_rate = to_double(key, v);
  else if (key == "learner.batch_size") c.batch_size = static_cast<int>(to_integer(key, v));
  else if (key == "learner.ridge") c.ridge = to_double(key, v);
  else if (key == "estimation.folds") c.folds = static_cast<int>(to_integer(key, v));
  else if (key == "estimation.grid") c.grid = v;
  else if (key == "estimation.arm") c.arm = static_cast<int>(to_integer(key, v));
  else if (key == "estimation.baseline_arm") c.baseline_arm = static_cast<int>(to_integer(key, v));
  else if (key == "inference.B") c.bootstrap = static_cast<int>(to_integer(key, v));
  else if (key == "inference.alpha") c.alpha = to_double(key, v);
  else if (key == "inference.critical") c.critical = v;
  else if (key == "inference.functional") c.functional = v;
  else if (key == "inference.pte_lower_boundary") c.pte_lower_boundary = to_bool(key, v);
  else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(std::stoull(v));
  else if (key == "run.threads") c.threads = static_cast<int>(to_integer(key, v));
  else if (key == "data.input") c.input = v;
  else if (key == "data.covariates") c.covariates = v;
  else if (key == "data.arm_column") c.arm_column = v;
  else if (key == "data.outcome_column") c.outcome_column = v;
  else if (key == "simulation.n") c.n = static_cast<std::size_t>(to_integer(key, v));
  else if (key == "simulation.reps") c.reps = static_cast<int>(to_integer(key, v));
  else if (key == "simulation.methods") c.methods = v;
  else if (key == "simulation.oracle_n") c.oracle_n = static_cast<std::size_t>(to_integer(key, v));
  else if (key == "benchmark.reps") c.bench_reps = static_cast<int>(to_integer(key, v));
  else if (key == "benchmark.locations") c.bench_locations = v;
  else throw UsageError("unknown config key '" + key + "'");
}

/// Every parameter of the run as dotted keys (the output directory excluded).
inline json to_json(const RunConfig& c) {
  json j;
  j["run"] = {{"mode", std::string(to_string(c.mode))}, {"seed", std::to_string(c.seed)}, {"threads", c.threads}};
  j["learner"] = {{"name", c.learner},         {"profile", c.profile}, {"epochs", c.epochs},
                  {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"ridge", c.ridge}};
  j["estimation"] = {{"folds", c.folds}, {"grid", c.grid}, {"arm", c.arm}, {"baseline_arm", c.baseline_arm}};
  j["inference"] = {{"B", c.bootstrap},
                    {"alpha", c.alpha},
                    {"critical", c.critical},
                    {"functional", c.functional},
                    {"pte_lower_boundary", c.pte_lower_boundary}};
  j["data"] = {{"input", c.input},
               {"covariates", c.covariates},
               {"arm_column", c.arm_column},
               {"outcome_column", c.outcome_column}};
  j["simulation"] = {{"n", c.n}, {"reps", c.reps}, {"methods", c.methods}, {"oracle_n", c.oracle_n}};
  j["benchmark"] = {{"reps", c.bench_reps}, {"locations", c.bench_locations}};
  return j;
}

inline std::map<std::string, std::string> flatten_json(const json& j) {
  std::map<std::string, std::string> out;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) continue;
    for (const auto& [key, value] : body.items()) {
      std::string text;
      if (value.is_string()) text = value.get<std::string>();
      else if (value.is_boolean()) text = value.get<bool>() ? "true" : "false";
      else if (value.is_number_float()) text = io::format_double(value.get<double>());
      else text = value.dump();
      out[section + "." + key] = text;
    }
  }
  return out;
}

/// Key-value text: `[section]` headers, `key = value` lines, `#` comments.
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t(io::detail::trim(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw UsageError("config line " + std::to_string(lineno) + ": bad section header");
      section = std::string(io::detail::trim(std::string_view(t).substr(1, t.size() - 2)));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(io::detail::trim(std::string_view(t).substr(0, eq)));
    const std::string value(io::detail::trim(std::string_view(t).substr(eq + 1)));
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

/// Loads a config file (JSON manifest or key-value text) into `c`.
inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::map<std::string, std::string> kv;
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw UsageError("config file " + path + ": " + e.what());
    }
    kv = flatten_json(j.contains("config") ? j["config"] : j);
  } else {
    std::istringstream is(text);
    kv = parse_ini(is);
  }
  for (const auto& [k, v] : kv) apply(c, k, v);
}

/// Grid from a spec string:
///   quantiles[:q1,q2,...]  pooled outcome quantiles (default 0.05..0.95)
///   range:a:b[:step]       a, a+step, ..., b
///   list:y1,y2,...         explicit locations
inline LocationGrid make_grid(const std::string& spec, const Vector& outcomes) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto numbers = [&](const std::string& s, char sep) {
    std::vector<double> v;
    for (const auto& item : detail::split_list(s, sep)) v.push_back(detail::to_double("grid", item));
    return v;
  };
  if (kind == "quantiles") {
    const std::vector<double> probs = rest.empty() ? default_quantile_levels() : numbers(rest, ',');
    return quantile_grid(outcomes, probs);
  }
  LocationGrid grid;
  if (kind == "range") {
    const std::vector<double> v = numbers(rest, ':');
    if (v.size() < 2 || v.size() > 3) throw UsageError("grid range needs range:a:b[:step]");
    const double step = v.size() == 3 ? v[2] : 1.0;
    if (!(step > 0) || v[1] < v[0]) throw UsageError("grid range needs a <= b and step > 0");
    const auto count = static_cast<long long>(std::floor((v[1] - v[0]) / step + 1e-9));
    for (long long k = 0; k <= count; ++k) grid.locations.push_back(v[0] + static_cast<double>(k) * step);
  } else if (kind == "list") {
    grid.locations = numbers(rest, ',');
  } else {
    throw UsageError("unknown grid spec '" + spec + "'");
  }
  grid.check();
  return grid;
}

inline Profile parse_profile(const std::string& s) {
  if (s == "simulation") return Profile::Simulation;
  if (s == "water") return Profile::Water;
  if (s == "abema") return Profile::Abema;
  throw UsageError("unknown profile '" + s + "'");
}

/// Learner for `name` with the config's training overrides applied.
inline LearnerKind learner_kind(const RunConfig& c, const std::string& name, std::uint64_t seed) {
  LearnerKind k;
  try {
    k = LearnerKind::from_name(name, parse_profile(c.profile));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  k.ridge = c.ridge;
  k.train.epochs = c.epochs;
  if (c.learning_rate > 0) k.train.learning_rate = c.learning_rate;
  if (c.batch_size > 0) k.train.batch_size = c.batch_size;
  k.train.seed = seed;
  return k;
}

inline void validate(const RunConfig& c) {
  if (c.folds < 2) throw UsageError("--folds must be >= 2");
  if (c.bootstrap < 2) throw UsageError("--B must be >= 2");
  if (!(c.alpha > 0 && c.alpha < 1)) throw UsageError("--alpha must lie in (0, 1)");
  if (c.threads < 1) throw UsageError("--threads must be >= 1");
  if (c.epochs < 1) throw UsageError("--epochs must be >= 1");
  if (c.reps < 2) throw UsageError("--reps must be >= 2");
  if (c.n < 2) throw UsageError("--n must be >= 2");
  if (c.critical != "two-sided" && c.critical != "literal") throw UsageError("--critical must be two-sided or literal");
  if (c.functional != "cdf" && c.functional != "dte" && c.functional != "pte")
    throw UsageError("--functional must be cdf, dte or pte");
  parse_profile(c.profile);
  if (c.learner != "empirical") learner_kind(c, c.learner, 0);
  for (const auto& name : detail::split_list(c.methods))
    if (name != "empirical") learner_kind(c, name, 0);
  if ((c.mode == Mode::Estimate || c.mode == Mode::BootstrapBand) && c.input.empty())
    throw UsageError("mode " + std::string(to_string(c.mode)) + " requires --input");
}

namespace detail {

inline std::string path_in(const RunConfig& c, const std::string& file) {
  return (std::filesystem::path(c.out) / file).string();
}

inline void write_manifest(const RunConfig& c, const json& seeds, const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "dte";
  m["config"] = to_json(c);
  m["seeds"] = seeds;
  m["outputs"] = outputs;
  io::write_text(path_in(c, "manifest.json"), m.dump(2) + "\n");
}

inline std::string seconds(double s) {
  std::ostringstream os;
  os.precision(6);
  os << s;
  return os.str();
}

inline io::LoadedData load_input(const RunConfig& c) {
  io::CsvSchema schema;
  schema.covariates = split_list(c.covariates);
  schema.arm_column = c.arm_column;
  schema.outcome_column = c.outcome_column;
  io::LoadedData loaded = io::load_csv(c.input, schema);
  std::cerr << "[io] loaded " << loaded.data.size() << " rows, " << loaded.data.dim() << " covariates, "
            << loaded.data.num_arms << " arms from " << c.input << "\n";
  return loaded;
}

inline AdjustedEstimate estimate_with(const RunConfig& c, const ExperimentData& data, const LocationGrid& grid,
                                      const std::string& method) {
  if (method == "empirical") return estimate_empirical(data, grid);
  const CrossFitPlan plan = make_folds(data.size(), c.folds, derive_seed(c.seed, {0xF0}));
  return estimate_adjusted(data, grid, learner_kind(c, method, derive_seed(c.seed, {0x1E})), plan);
}

inline int run_simulate(const RunConfig& c) {
  StudyConfig study;
  study.dgp.n = c.n;
  study.dgp.seed = c.seed;
  study.reps = c.reps;
  study.folds = c.folds;
  study.oracle_size = c.oracle_n;
  study.threads = c.threads;
  study.oracle_cache_dir = path_in(c, "cache");
  if (c.grid.rfind("quantiles", 0) != 0) throw UsageError("simulate mode needs a quantiles grid");
  if (const auto colon = c.grid.find(':'); colon != std::string::npos) {
    study.probs.clear();
    for (const auto& q : split_list(c.grid.substr(colon + 1))) study.probs.push_back(to_double("grid", q));
  }
  const std::vector<std::string> names = split_list(c.methods);
  if (names.empty()) throw UsageError("--methods is empty");
  for (const auto& name : names) {
    if (name == "empirical") study.methods.push_back(MethodSpec::empirical());
    else study.methods.push_back(MethodSpec::of(learner_kind(c, name, 0)));
  }

  std::cerr << "[simulation] " << c.reps << " replications, n=" << c.n << ", methods=" << c.methods << "\n";
  const SimulationReport report = run_study(study);

  io::emit_study(report, names, path_in(c, "study.csv"));
  std::ostringstream oracle;
  oracle << "q,location,oracle_dte\n";
  for (std::size_t j = 0; j < report.oracle.grid.size(); ++j)
    oracle << io::format_double(report.oracle.probs[j]) << ',' << io::format_double(report.oracle.grid[j]) << ','
           << io::format_double(report.oracle.dte[static_cast<Eigen::Index>(j)]) << '\n';
  io::write_text(path_in(c, "oracle.csv"), oracle.str());

  std::ostringstream timings;
  timings << "method,mean_seconds,sd_seconds\n";
  for (const auto& name : names) {
    const MethodSummary& m = report.method(name);
    timings << name << ',' << seconds(m.mean_fit_seconds()) << ',' << seconds(m.sd_fit_seconds()) << '\n';
  }
  io::write_text(path_in(c, "timings.csv"), timings.str());

  json seeds = json::array();
  for (auto s : report.replication_seeds) seeds.push_back(std::to_string(s));
  write_manifest(c, {{"master", std::to_string(c.seed)}, {"replications", seeds}},
                 {"study.csv", "oracle.csv", "timings.csv"});
  return 0;
}

inline int run_estimate(const RunConfig& c) {
  const io::LoadedData loaded = load_input(c);
  const ExperimentData& data = loaded.data;
  const LocationGrid grid = make_grid(c.grid, data.outcomes);
  validate_experiment(data, grid);
  std::cerr << "[estimation] learner=" << c.learner << ", M=" << grid.size() << ", L=" << c.folds << "\n";
  const AdjustedEstimate emp = estimate_empirical(data, grid);
  const AdjustedEstimate adj = estimate_with(c, data, grid, c.learner);

  std::ostringstream cdf;
  cdf << "location,arm,label,empirical,adjusted\n";
  for (Arm w = 1; w <= data.num_arms; ++w)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      cdf << io::format_double(grid[j]) << ',' << w << ',' << loaded.arm_labels[static_cast<std::size_t>(w - 1)]
          << ',' << io::format_double(emp.theta.values(w - 1, jj)) << ','
          << io::format_double(adj.theta.values(w - 1, jj)) << '\n';
    }
  io::write_text(path_in(c, "cdf.csv"), cdf.str());
  std::vector<std::string> outputs{"cdf.csv"};

  if (data.num_arms >= 2) {
    const Vector d_emp = dte(emp.theta, c.arm, c.baseline_arm);
    const Vector d_adj = dte(adj.theta, c.arm, c.baseline_arm);
    std::ostringstream os;
    os << "location,empirical,adjusted\n";
    for (std::size_t j = 0; j < grid.size(); ++j)
      os << io::format_double(grid[j]) << ',' << io::format_double(d_emp[static_cast<Eigen::Index>(j)]) << ','
         << io::format_double(d_adj[static_cast<Eigen::Index>(j)]) << '\n';
    io::write_text(path_in(c, "dte.csv"), os.str());
    outputs.push_back("dte.csv");
    if (grid.size() >= 2) {
      const Vector p_emp = pte(emp.theta, c.arm, c.baseline_arm, c.pte_lower_boundary);
      const Vector p_adj = pte(adj.theta, c.arm, c.baseline_arm, c.pte_lower_boundary);
      const std::size_t offset = c.pte_lower_boundary ? 0 : 1;
      std::ostringstream ps;
      ps << "location,empirical,adjusted\n";
      for (Eigen::Index j = 0; j < p_emp.size(); ++j)
        ps << io::format_double(grid[static_cast<std::size_t>(j) + offset]) << ',' << io::format_double(p_emp[j])
           << ',' << io::format_double(p_adj[j]) << '\n';
      io::write_text(path_in(c, "pte.csv"), ps.str());
      outputs.push_back("pte.csv");
    }
  }
  write_manifest(c, {{"master", std::to_string(c.seed)}}, outputs);
  return 0;
}

inline Functional make_functional(const RunConfig& c) {
  if (c.functional == "cdf") return Functional::cdf(c.arm);
  if (c.functional == "pte") return Functional::pte(c.arm, c.baseline_arm, c.pte_lower_boundary);
  return Functional::dte(c.arm, c.baseline_arm);
}

inline int run_bootstrap_band(const RunConfig& c) {
  const io::LoadedData loaded = load_input(c);
  const ExperimentData& data = loaded.data;
  const LocationGrid grid = make_grid(c.grid, data.outcomes);
  validate_experiment(data, grid);

  BootstrapOptions opts;
  opts.repetitions = c.bootstrap;
  opts.alpha = c.alpha;
  opts.seed = derive_seed(c.seed, {0xB0});
  opts.critical = c.critical == "literal" ? CriticalValue::Literal : CriticalValue::TwoSided;
  opts.threads = c.threads;
  const Functional functional = make_functional(c);

  std::cerr << "[inference] " << c.functional << " band, learner=" << c.learner << ", B=" << c.bootstrap << "\n";
  const AdjustedEstimate emp = estimate_empirical(data, grid);
  const EffectBand emp_band = bootstrap_band(data, grid, emp, functional, opts);
  io::emit_band(emp_band, path_in(c, "band_empirical.csv"));
  std::vector<std::string> outputs{"band_empirical.csv"};

  if (c.learner != "empirical") {
    const AdjustedEstimate adj = estimate_with(c, data, grid, c.learner);
    const EffectBand adj_band = bootstrap_band(data, grid, adj, functional, opts);
    io::emit_band(adj_band, path_in(c, "band.csv"));
    outputs.push_back("band.csv");
    try {
      const Vector red = se_reduction(emp_band, adj_band);
      std::ostringstream os;
      os << "location,se_reduction_pct\n";
      for (Eigen::Index j = 0; j < red.size(); ++j)
        os << io::format_double(adj_band.locations[static_cast<std::size_t>(j)]) << ',' << io::format_double(red[j])
           << '\n';
      io::write_text(path_in(c, "se_reduction.csv"), os.str());
      outputs.push_back("se_reduction.csv");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroBaselineSE) throw;
      std::cerr << "[inference] skipping se_reduction.csv: " << e.what() << "\n";
    }
  }
  write_manifest(c, {{"master", std::to_string(c.seed)}, {"bootstrap", std::to_string(opts.seed)}}, outputs);
  return 0;
}

inline int run_benchmark(const RunConfig& c) {
  DgpConfig dgp;
  dgp.n = c.n;
  dgp.seed = c.seed;
  const ExperimentData data = generate(dgp);
  const LocationGrid grid = make_grid(c.grid, data.outcomes);
  const CrossFitPlan plan = make_folds(data.size(), c.folds, derive_seed(c.seed, {0xF0}));

  using Clock = std::chrono::steady_clock;
  std::ostringstream table;
  table << "method,mean_seconds,sd_seconds\n";
  for (const std::string name : {"linear", "nn-single", "nn-multi", "nn-multi-monotone"}) {
    std::vector<double> times;
    for (int r = 0; r < c.bench_reps; ++r) {
      const auto t0 = Clock::now();
      estimate_adjusted(data, grid, learner_kind(c, name, derive_seed(c.seed, {static_cast<std::uint64_t>(r)})), plan);
      times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    MethodSummary s;
    s.fit_seconds = times;
    table << name << ',' << seconds(s.mean_fit_seconds()) << ',' << seconds(s.sd_fit_seconds()) << '\n';
    std::cerr << "[benchmark] " << name << ": " << seconds(s.mean_fit_seconds()) << " s\n";
  }
  io::write_text(path_in(c, "benchmark.csv"), table.str());

  std::vector<int> locations;
  for (const auto& s : split_list(c.bench_locations)) locations.push_back(static_cast<int>(to_integer("locations", s)));
  std::ostringstream scaling;
  scaling << "family,locations,joint_seconds,loop_seconds,ratio\n";
  for (const std::string family : {"linear", "nn-multi"}) {
    const auto rows = benchmark_training_cost(learner_kind(c, family, c.seed), static_cast<int>(c.n / 2),
                                              static_cast<int>(data.dim()), locations, c.seed);
    for (const auto& r : rows)
      scaling << family << ',' << r.locations << ',' << seconds(r.joint_seconds) << ',' << seconds(r.loop_seconds)
              << ',' << seconds(r.ratio) << '\n';
  }
  io::write_text(path_in(c, "scaling.csv"), scaling.str());
  write_manifest(c, {{"master", std::to_string(c.seed)}}, {"benchmark.csv", "scaling.csv"});
  return 0;
}

}  // namespace detail

/// Runs one mode. Returns 0 on success, 1 on a domain error, 2 on a usage
/// error. Progress goes to standard error, results to files under `out`.
inline int run(const RunConfig& config) {
  try {
    validate(config);
    switch (config.mode) {
      case Mode::Simulate: return detail::run_simulate(config);
      case Mode::Estimate: return detail::run_estimate(config);
      case Mode::BootstrapBand: return detail::run_bootstrap_band(config);
      case Mode::Benchmark: return detail::run_benchmark(config);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dte::cli
