#pragma once

#include <string>

#include "rdsmc/core.hpp"

namespace rdsmc {

enum class ScheduleKind { vp, ve };
enum class VeProfile { linear, quadratic, exponential };

struct ScheduleParams {
  ScheduleKind kind = ScheduleKind::vp;
  // VP: b(tau) = b_min + tau (b_max - b_min).
  double b_min = 0.1;
  double b_max = 20.0;
  // VE: sigma(tau) profile. linear: sigma_max tau; quadratic: sigma_max tau^2;
  // exponential: sigma^2 = sigma_min^2 ((sigma_max / sigma_min)^(2 tau) - 1).
  VeProfile profile = VeProfile::exponential;
  double sigma_min = 0.01;
  double sigma_max = 10.0;
};

/// Coefficients (alpha, sigma, f, g) of the forward SDE on the uniform grid
/// tau_t = t / T, t = 0..T.
class DiffusionSchedule {
 public:
  struct Coefficients {
    double alpha, sigma, drift, diffusion;
  };

  DiffusionSchedule(ScheduleParams params, int steps);

  int steps() const { return steps_; }
  double delta() const { return delta_; }
  const ScheduleParams& params() const { return params_; }

  double alpha(int t) const { return alpha_(t); }
  double sigma(int t) const { return sigma_(t); }
  double drift(int t) const { return drift_(t); }
  double diffusion(int t) const { return diffusion_(t); }
  double tau(int t) const { return static_cast<double>(t) * delta_; }

  /// Closed-form coefficients at continuous time tau.
  static Coefficients at(const ScheduleParams& params, double tau);

  /// Variance of the reference distribution p(x_T).
  double reference_variance() const;

 private:
  ScheduleParams params_;
  int steps_;
  double delta_;
  Vector alpha_, sigma_, drift_, diffusion_;
};

DiffusionSchedule build_schedule(const ScheduleParams& params, int steps);

/// log N(x | mean, variance I).
template <class A, class B>
double isotropic_normal_logpdf(const Eigen::MatrixBase<A>& x,
                               const Eigen::MatrixBase<B>& mean, double variance) {
  const double d = static_cast<double>(x.size());
  return -0.5 * d * (kLogTwoPi + std::log(variance)) -
         0.5 * (x - mean).squaredNorm() / variance;
}

/// log p(x_{t+1} | x_t) for the Euler forward kernel
/// N(x_t (1 + f_t delta), g_t^2 delta I).
double forward_kernel_logpdf(const DiffusionSchedule& schedule, int t,
                             const ConstVectorRef& x_t, const ConstVectorRef& x_next);

/// Mean of the Euler reverse kernel q(x_t | x_{t+1}, u_{t+1}):
/// x_{t+1} - [f_{t+1} x_{t+1} - g_{t+1}^2 s] delta.
Vector reverse_mean(const DiffusionSchedule& schedule, int t,
                    const ConstVectorRef& x_next, const ConstVectorRef& score);

/// Variance g_{t+1}^2 delta of the reverse kernel at step t.
double reverse_variance(const DiffusionSchedule& schedule, int t);

double reverse_proposal_logpdf(const DiffusionSchedule& schedule, int t,
                               const ConstVectorRef& x_next,
                               const ConstVectorRef& score,
                               const ConstVectorRef& x_t);

/// Draws x_t into `out` and returns log q(x_t | x_{t+1}, u_{t+1}).
double reverse_proposal(const DiffusionSchedule& schedule, int t,
                        const ConstVectorRef& x_next, const ConstVectorRef& score,
                        RngStream& rng, VectorRef out);

/// p(x_T): N(0, I) for VP, N(0, sigma_T^2 I) for VE.
double reference_logpdf(const DiffusionSchedule& schedule, const ConstVectorRef& x);
void reference_sample(const DiffusionSchedule& schedule, RngStream& rng, VectorRef out);

std::string to_string(ScheduleKind kind);
std::string to_string(VeProfile profile);

}  // namespace rdsmc
