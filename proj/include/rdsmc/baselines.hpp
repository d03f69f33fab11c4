#pragma once

#include "rdsmc/rdsmc.hpp"

namespace rdsmc {

/// Geometric annealing from rho_0 = N(0, (R^2 + tau^2) I) to the target,
/// beta_t = t / steps.
struct AnnealConfig {
  int steps = 1000;
  Index n_particles = 256;
  /// Kept for reporting; the chains are realized as mcmc_steps sequential
  /// moves per particle.
  int n_chains = 4;
  int mcmc_steps = 32;
  double step_init = 0.1;
  double target_accept = 0.75;
  double adapt_rate = 0.05;
  double kappa = 0.3;  // SMC only
  ResampleScheme scheme = ResampleScheme::systematic;
  double radius = 1.0;  // R
  double tau = 0.0;
  int workers = 1;

  double reference_variance() const { return radius * radius + tau * tau; }
};

/// delta * exp(rate (observed - target)), clamped to [1e-8, 1e3].
double adapt_step_size(double delta, double observed_accept, double target_accept,
                       double rate = 0.05);

/// AIS: per level, reweight by (beta_t - beta_{t-1})(log pi~ - log rho_0), then
/// mcmc_steps MALA moves targeting rho_t with a shared adapted step size.
RunResult run_ais_baseline(const Target& target, const AnnealConfig& config, std::uint64_t seed);

/// As AIS with ESS-gated resampling at threshold config.kappa.
RunResult run_smc_baseline(const Target& target, const AnnealConfig& config, std::uint64_t seed);

struct BaselineScale {
  double radius, tau;
};
/// Default (R, tau) of the initial distribution for a target.
BaselineScale default_baseline_scale(const Target& target);

void validate_anneal_config(const AnnealConfig& config);

}  // namespace rdsmc
