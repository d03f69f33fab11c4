#pragma once

#include "rdsmc/dataset.hpp"
#include "rdsmc/targets.hpp"

namespace rdsmc {

/// |w1_hat - w1| where w1_hat is the weighted fraction of samples whose most
/// probable component (by w_k N(x | m_k, s2 I)) is the first one.
double gmm_weight_ratio_bias(const ParticleMatrix& samples, const Vector& weights,
                             const GmmTarget& gmm);

/// Weighted histogram over `bins` equal cells of [lo, hi]; values outside
/// the range fall into the edge cells. Returns normalized masses.
Vector weighted_histogram(const Vector& values, const Vector& weights, int bins, double lo,
                          double hi);

/// Total variation distance 0.5 sum |mu_i - nu_i| between weighted histograms.
double histogram_tvd(const Vector& values_a, const Vector& weights_a, const Vector& values_b,
                     const Vector& weights_b, int bins, double lo, double hi);

/// Kolmogorov-Smirnov distance sup |F_a - F_b| between weighted 1-D
/// empirical CDFs.
double weighted_ks(const Vector& a, const Vector& wa, const Vector& b, const Vector& wb);

/// Mean KS distance over `n_projections` random unit directions.
double sliced_ksd(const ParticleMatrix& samples, const Vector& weights,
                  const ParticleMatrix& reference, const Vector& reference_weights,
                  int n_projections, RngStream& rng);

/// Weighted mean over posterior samples of log p(w, b) + sum_test log p(y | x; w, b).
double predictive_log_likelihood(const ParticleMatrix& samples, const Vector& weights,
                                 const Dataset& test);

inline double logz_bias(double log_z_hat, double log_z) { return std::abs(log_z_hat - log_z); }

/// Radii and polar angles (in [-pi, pi]) of 2-D samples.
Vector radii(const ParticleMatrix& samples);
Vector angles(const ParticleMatrix& samples);

}  // namespace rdsmc
