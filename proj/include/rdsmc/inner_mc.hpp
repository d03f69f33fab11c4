#pragma once

#include <optional>
#include <string>

#include "rdsmc/core.hpp"
#include "rdsmc/mcmc.hpp"
#include "rdsmc/targets.hpp"

namespace rdsmc {

enum class InnerEstimator { is, ais, ais_resample };
enum class ScoreIdentity { dsi, tsi, msi };
/// reversed_kernel: N(x / alpha, sigma^2 / alpha^2 I).
/// centered: N(x, sigma^2 / alpha^2 I).
/// gaussian_approx: posterior of u under a Gaussian stand-in
///   N(approx_mean, approx_variance I) for the target; exact for Gaussian targets.
enum class InnerProposal { reversed_kernel, centered, gaussian_approx };

struct InnerConfig {
  InnerEstimator estimator = InnerEstimator::is;
  ScoreIdentity identity = ScoreIdentity::dsi;
  int n_is = 32;
  int n_steps = 1;
  int m_steps = 1;
  KernelParams kernel;
  InnerProposal proposal = InnerProposal::reversed_kernel;
  std::optional<double> score_clip;
  Vector approx_mean;
  double approx_variance = 1.0;
  /// Optional clamp of log p^ to [lo, hi].
  std::optional<std::pair<double, double>> log_marginal_clamp;
};

struct InnerEstimate {
  Vector score;
  double log_marginal = kNegInf;
  double ess = 0.0;
  double acceptance = 0.0;  // NaN when no MCMC move was made
  bool degenerate = false;
};

/// Isotropic Gaussian proposal q(u | x_t).
struct GaussianProposal {
  Vector mean;
  double variance;

  double logpdf(const ConstVectorRef& u) const;
  void sample(RngStream& rng, VectorRef out) const;
};

GaussianProposal inner_proposal(const InnerConfig& config, const ConstVectorRef& x,
                                double alpha, double sigma);

/// Rescales `score` to norm `threshold` when its norm exceeds it.
Vector clip_score(const ConstVectorRef& score, double threshold);

/// Weighted posterior sample set used by the score identities.
struct WeightedPosterior {
  ParticleMatrix u;
  ParticleMatrix grad_log_target;  // empty unless the identity needs it
  Vector weights;                  // normalized
};

/// DSI: sum w (alpha u - x) / sigma^2.
/// TSI: sum w grad log pi~(u) / alpha.
/// MSI: (alpha^2 + sigma^2)^-1 sum w [alpha (u + grad log pi~(u)) - x].
Vector combine_identity(ScoreIdentity identity, const WeightedPosterior& post,
                        const ConstVectorRef& x, double alpha, double sigma);

/// Importance-sampling estimate of the score and of log(Z p_t(x)).
InnerEstimate is_estimate(const Target& target, double alpha, double sigma,
                          const ConstVectorRef& x, const InnerConfig& config,
                          const RngStream& rng);

/// Annealed importance sampling along q^(1-beta) (pi~ N(x | alpha u, sigma^2))^beta,
/// beta_k = k / n_steps; with `config.estimator == ais_resample` the inner
/// particles are resampled at every level and log p^ is the sum over levels
/// of log-mean incremental weights.
InnerEstimate ais_estimate(const Target& target, double alpha, double sigma,
                           const ConstVectorRef& x, const InnerConfig& config,
                           const RngStream& rng);

/// Dispatches on config.estimator, applies clipping and clamping.
InnerEstimate inner_estimate(const Target& target, double alpha, double sigma,
                             const ConstVectorRef& x, const InnerConfig& config,
                             const RngStream& rng);

/// Throws std::invalid_argument when the configuration is unusable on `target`.
void validate_inner_config(const InnerConfig& config, const Target& target);

std::string to_string(InnerEstimator e);
std::string to_string(ScoreIdentity s);
std::string to_string(InnerProposal p);
InnerEstimator estimator_from_string(const std::string& s);
ScoreIdentity identity_from_string(const std::string& s);
InnerProposal proposal_from_string(const std::string& s);

}  // namespace rdsmc
