#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rdsmc/baselines.hpp"
#include "rdsmc/dataset.hpp"
#include "rdsmc/rdsmc.hpp"

namespace rdsmc {

struct TargetSpec {
  std::string kind = "gaussian";  // gaussian | gmm | rings | funnel | logreg
  int dim = 2;
  std::uint64_t seed = 0;  // gmm means
  double box_width = 80.0;
  std::string dataset;
  std::uint64_t split_seed = 0;
  bool split_per_replicate = false;  // "split_seed: replicate" reuses each replicate seed
  std::vector<double> mean;  // gaussian; defaults to zeros
  double variance = 1.0;
  double log_scale = 0.0;
  bool gradient = true;
};

enum class SamplerKind { rdsmc, rdsmc_is, rdsmc_proposal, ais_baseline, smc_baseline };

struct OutputSpec {
  std::string dir = "results";
  bool samples = false;
  bool ess_trace = false;
  /// When false the wall_time column is written as NA so repeated runs are
  /// byte-identical.
  bool wall_time = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TargetSpec target;
  SamplerKind sampler = SamplerKind::rdsmc;
  OuterConfig outer;
  InnerConfig inner;
  AnnealConfig anneal;
  bool anneal_radius_auto = true;
  bool anneal_tau_auto = true;
  ScheduleParams schedule;
  int steps = 100;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> metrics;
  int reference_samples = 0;  // 0 means N
  int projections = 128;
  int bins = 256;
  OutputSpec output;
  std::string base_dir = ".";  // directory of the config file
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidationReport {
  std::vector<std::string> unknown_keys;
  std::vector<std::string> violations;
  std::string resolved;  // effective configuration as YAML

  bool ok() const { return violations.empty(); }
};

/// Parses and checks a config file without throwing on content problems.
ValidationReport validate_config(const std::string& path);
ValidationReport validate_config_text(const std::string& text, const std::string& base_dir = ".");

/// Throws ConfigError listing every violation.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

std::string to_yaml(const ExperimentConfig& config);

struct TargetBundle {
  std::shared_ptr<const Target> target;
  std::optional<DatasetSplits> data;
  std::optional<GmmTarget> gmm;
};

TargetBundle build_target(const TargetSpec& spec, const std::string& base_dir = ".");

struct MetricValue {
  std::string metric;
  double value;
};

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunResult run;
  std::vector<MetricValue> metrics;
  double wall_time = 0.0;
};

/// Runs one replicate and evaluates the requested metrics.
ReplicateOutcome run_replicate(const ExperimentConfig& config, const TargetBundle& bundle,
                               std::uint64_t seed, int workers);

/// Runs every replicate, writes result files under config.output.dir and
/// returns the exit status: 0 all replicates succeeded, 1 otherwise.
int run_experiment(const ExperimentConfig& config, int workers, std::ostream& log);

/// Collects summary.tsv files below `dir` into one comparison table, written
/// to `out` and to dir/comparison.tsv. Returns the number of tables found.
int report_results(const std::string& dir, std::ostream& out);

std::string to_string(SamplerKind k);
SamplerKind sampler_from_string(const std::string& s);

}  // namespace rdsmc
