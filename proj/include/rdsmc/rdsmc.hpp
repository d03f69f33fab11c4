#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdsmc/core.hpp"
#include "rdsmc/diffusion.hpp"
#include "rdsmc/inner_mc.hpp"
#include "rdsmc/targets.hpp"

namespace rdsmc {

enum class ResampleScheme { systematic, multinomial };
/// full: ESS-gated resampling. is_only: never resample, keep weights.
/// proposal_only: never resample and return uniform weights.
enum class Variant { full, is_only, proposal_only };

struct OuterConfig {
  Index n_particles = 256;
  ResampleScheme scheme = ResampleScheme::systematic;
  /// Resample when ESS / N < kappa; kappa >= 1 resamples at every allowed step.
  double kappa = 0.3;
  /// Resampling is only considered at steps t <= t_start; defaults to T.
  std::optional<int> t_start;
  Variant variant = Variant::full;
  int workers = 1;
};

struct StepDiagnostics {
  int t = 0;
  double ess = 0.0;
  bool resampled = false;  // ancestors drawn before propagating to step t
  double mean_inner_ess = std::numeric_limits<double>::quiet_NaN();
  double mean_acceptance = std::numeric_limits<double>::quiet_NaN();
  Index dead_particles = 0;
};

/// Per-particle accumulated terms of the trajectory weights, carried along
/// ancestry when resampling.
struct TrajectoryTerms {
  Vector log_reference;     // log p(x_T)
  Vector sum_log_forward;   // sum_t log p(x_{t+1} | x_t)
  Vector sum_log_proposal;  // sum_t log q(x_t | x_{t+1}, u_{t+1})
  Vector log_target;        // log pi~(x_0)
  Vector sum_log_increments;  // sum of log weights without resampling adjustments
};

struct RunResult {
  ParticleMatrix positions;
  Vector weights;  // normalized
  /// Empty for proposal_only; -inf when the run degenerated.
  std::optional<double> log_z;
  std::vector<StepDiagnostics> trace;
  int resample_events = 0;
  double mean_inner_ess = std::numeric_limits<double>::quiet_NaN();
  double mean_acceptance = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
  std::string failure;
  TrajectoryTerms terms;
};

/// log w_T = log p^(x_T, u_T) - log p(x_T).
inline double initial_log_weight(double log_marginal, double log_reference) {
  return log_marginal - log_reference;
}

/// log w_t = adjustment + log p^_t + log p(x_{t+1} | x_t) - log p^_{t+1} - log q.
inline double intermediate_log_weight(double log_marginal_t, double log_forward,
                                      double log_marginal_next, double log_proposal,
                                      double adjustment = 0.0) {
  return adjustment + log_marginal_t + log_forward - log_marginal_next - log_proposal;
}

/// log(N w_bar_i) for each particle: the weight carried into the next
/// increment when resampling is skipped.
Vector no_resample_adjustment(const Vector& log_weights);

/// Resampling gate at loop step t given the ESS fraction of the incoming weights.
bool should_resample(int t, int t_start, double kappa, double ess_fraction);

RunResult run_rdsmc(const Target& target, const DiffusionSchedule& schedule,
                    const OuterConfig& outer, const InnerConfig& inner, std::uint64_t seed);

void validate_outer_config(const OuterConfig& outer, int steps);

std::string to_string(ResampleScheme s);
std::string to_string(Variant v);
ResampleScheme scheme_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

}  // namespace rdsmc
