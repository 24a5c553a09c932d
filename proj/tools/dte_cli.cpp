#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dte/cli.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Every flag maps onto a dotted config key; values given on the command
// line are applied after the config file.
const std::vector<Flag> kFlags = {
    {"--n", "simulation.n", "sample size per replication"},
    {"--reps", "simulation.reps", "Monte-Carlo replications"},
    {"--methods", "simulation.methods", "comma separated methods for simulate"},
    {"--oracle-n", "simulation.oracle_n", "oracle sample size"},
    {"--folds", "estimation.folds", "cross-fitting folds"},
    {"--learner", "learner.name", "linear | nn-single | nn-multi | nn-multi-monotone | empirical"},
    {"--profile", "learner.profile", "simulation | water | abema"},
    {"--epochs", "learner.epochs", "training epochs"},
    {"--lr", "learner.learning_rate", "learning rate (0 = profile default)"},
    {"--batch", "learner.batch_size", "mini-batch size (0 = profile default)"},
    {"--ridge", "learner.ridge", "ridge penalty for the linear learner"},
    {"--grid", "estimation.grid", "quantiles[:q,...] | range:a:b[:step] | list:y,..."},
    {"--arm", "estimation.arm", "treatment arm index"},
    {"--baseline-arm", "estimation.baseline_arm", "baseline arm index"},
    {"--B", "inference.B", "bootstrap repetitions"},
    {"--alpha", "inference.alpha", "significance level"},
    {"--critical", "inference.critical", "two-sided | literal"},
    {"--functional", "inference.functional", "cdf | dte | pte"},
    {"--pte-lower-boundary", "inference.pte_lower_boundary", "include the lowest interval in PTE"},
    {"--seed", "run.seed", "master seed"},
    {"--threads", "run.threads", "worker threads"},
    {"--input", "data.input", "experiment CSV"},
    {"--covariates", "data.covariates", "comma separated covariate columns"},
    {"--arm-column", "data.arm_column", "arm column name"},
    {"--outcome-column", "data.outcome_column", "outcome column name"},
    {"--bench-reps", "benchmark.reps", "timing repetitions per method"},
    {"--bench-locations", "benchmark.locations", "comma separated M values for scaling"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributional treatment effects with regression adjustment"};
  app.require_subcommand(1);

  struct Parsed {
    std::string config;
    std::string out;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Parsed> parsed;

  const std::vector<std::pair<std::string, std::string>> modes = {
      {"simulate", "Monte-Carlo study on the simulated design"},
      {"estimate", "CDF, DTE and PTE point estimates for an experiment CSV"},
      {"bootstrap-band", "multiplier-bootstrap confidence bands"},
      {"benchmark", "fit-time comparison of the adjustment learners"},
  };
  for (const auto& [mode, about] : modes) {
    CLI::App* sub = app.add_subcommand(mode, about);
    Parsed& p = parsed[mode];
    sub->add_option("--config", p.config, "config file (key-value text or a run manifest)");
    sub->add_option("--out", p.out, "output directory");
    for (const Flag& f : kFlags) sub->add_option(f.name, p.values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Parsed& p = parsed.at(sub->get_name());
  dte::cli::RunConfig config;
  try {
    if (!p.config.empty()) dte::cli::load_config_file(config, p.config);
    config.mode = dte::cli::parse_mode(sub->get_name());
    for (const Flag& f : kFlags)
      if (sub->count(f.name) > 0) dte::cli::apply(config, f.key, p.values.at(f.key));
    if (sub->count("--out") > 0) config.out = p.out;
  } catch (const dte::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  return dte::cli::run(config);
}
