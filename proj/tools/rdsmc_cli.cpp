#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "rdsmc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reverse diffusion SMC sampler and experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "Run every replicate of an experiment config");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  run->add_option("-w,--workers", workers, "Worker threads (default: RDSMC_WORKERS or 1)");
  run->add_option("-o,--output", output_dir, "Output directory (overrides the config)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print the resolved form");
  validate->add_option("config", validate_path, "Experiment config (YAML)")->required();

  std::string results_dir;
  auto* report = app.add_subcommand("report", "Aggregate summary tables below a directory");
  report->add_option("dir", results_dir, "Results directory")->required()->check(
      CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*run) {
    rdsmc::ExperimentConfig cfg;
    try {
      cfg = rdsmc::load_config(config_path);
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
    if (const char* env = std::getenv("RDSMC_OUTPUT_DIR")) cfg.output.dir = env;
    if (!output_dir.empty()) cfg.output.dir = output_dir;
    if (workers < 1) workers = rdsmc::default_workers();
    try {
      return rdsmc::run_experiment(cfg, workers, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }

  if (*validate) {
    const auto rep = rdsmc::validate_config(validate_path);
    std::cout << "unknown keys: " << rep.unknown_keys.size() << '\n';
    for (const auto& k : rep.unknown_keys) std::cout << "  " << k << '\n';
    std::cout << "violations: " << rep.violations.size() << '\n';
    for (const auto& v : rep.violations) std::cout << "  " << v << '\n';
    std::cout << "---\n" << rep.resolved;
    return rep.ok() ? 0 : 2;
  }

  if (*report) {
    try {
      const int n = rdsmc::report_results(results_dir, std::cout);
      if (n == 0) {
        std::cerr << "no summary.tsv found below " << results_dir << '\n';
        return 1;
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return 0;
}
