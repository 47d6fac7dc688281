// coverage: Good-Turing sample coverage estimation and CLT diagnostics.

#include <iostream>

#include "CLI11.hpp"

#include "coverage/io.hpp"

namespace {

void add_output_options(CLI::App* sub, coverage::RunConfig& cfg) {
  sub->add_option("--format", cfg.format, "Output format: json or csv")->capture_default_str();
  sub->add_option("--out", cfg.out, "Output file (default: standard output)");
}

}  // namespace

int main(int argc, char** argv) {
  using coverage::Command;
  coverage::RunConfig cfg;
  CLI::App app{"Good-Turing sample coverage estimation and CLT diagnostics"};
  app.set_version_flag("--version", coverage::kVersion);
  app.require_subcommand(1);

  auto* estimate = app.add_subcommand("estimate", "Coverage estimate and Wald interval from counts");
  estimate->add_option("--input", cfg.input, "Counts file (raw or profile format)");
  estimate->add_option("--level", cfg.level, "Confidence level")->capture_default_str();
  estimate->add_option("--variance-mode", cfg.variance_mode, "esty or f1-only")
      ->capture_default_str();
  auto* strict = estimate->add_flag("--strict", "Require sum j*F_j to equal the declared n");
  auto* declared =
      estimate->add_flag("--declared", "Allow a declared n that differs from sum j*F_j");
  strict->excludes(declared);
  add_output_options(estimate, cfg);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo replicate batch with fit checks");
  simulate->add_option("--family", cfg.family, "Population family, e.g. pareto:b=3");
  simulate->add_option("--n", cfg.n, "Sample size");
  simulate->add_option("--replicates", cfg.replicates)->capture_default_str();
  simulate->add_option("--seed", cfg.seed)->capture_default_str();
  simulate->add_option("--level", cfg.level)->capture_default_str();
  simulate->add_option("--variance-mode", cfg.variance_mode)->capture_default_str();
  simulate->add_flag("--coupled", cfg.coupled, "Also draw the coupled Poissonized sample");
  simulate->add_option("--tolerance", cfg.truncation_tolerance, "Truncation tolerance");
  simulate->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--qq-out", cfg.qq_out, "Write QQ points of z_expected as CSV");
  add_output_options(simulate, cfg);

  auto* conditions = app.add_subcommand("conditions", "Exact condition diagnostics over an n grid");
  conditions->add_option("--family", cfg.family, "Population family");
  conditions->add_option("--n-grid", cfg.n_grid, "Comma-separated sample sizes");
  conditions->add_option("--epsilons", cfg.epsilons, "Comma-separated epsilon grid");
  conditions->add_option("--tolerance", cfg.truncation_tolerance, "Truncation tolerance");
  conditions->add_option("--thresholds", cfg.thresholds,
                         "Heuristic cutoffs: ef1_over_n=,mass=,lindeberg=,epsilon=");
  add_output_options(conditions, cfg);

  auto* tomato =
      app.add_subcommand("reproduce-example4", "Tomato EST example from the embedded profile");
  tomato->add_option("--level", cfg.level)->capture_default_str();
  add_output_options(tomato, cfg);

  auto* model = app.add_subcommand("model", "Export a population model as a two-column table");
  model->add_option("--family", cfg.family, "Population family");
  model->add_option("--n", cfg.n, "Sample size the model is built for");
  model->add_option("--tolerance", cfg.truncation_tolerance, "Truncation tolerance");
  model->add_option("--out", cfg.out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*estimate) {
    cfg.command = Command::estimate;
    if (*strict) cfg.profile_mode = coverage::ProfileMode::strict;
    if (*declared) cfg.profile_mode = coverage::ProfileMode::declared;
  } else if (*simulate) {
    cfg.command = Command::simulate;
  } else if (*conditions) {
    cfg.command = Command::conditions;
  } else if (*tomato) {
    cfg.command = Command::reproduce_tomato;
  } else {
    cfg.command = Command::model;
  }
  return coverage::run(cfg, std::cout, std::cerr);
}
