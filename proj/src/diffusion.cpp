#include "rdsmc/diffusion.hpp"

#include <stdexcept>

namespace rdsmc {

DiffusionSchedule::Coefficients DiffusionSchedule::at(const ScheduleParams& p,
                                                      double tau) {
  Coefficients c{};
  if (p.kind == ScheduleKind::vp) {
    const double b = p.b_min + tau * (p.b_max - p.b_min);
    const double integral = p.b_min * tau + 0.5 * (p.b_max - p.b_min) * tau * tau;
    c.alpha = std::exp(-0.5 * integral);
    c.sigma = std::sqrt(-std::expm1(-integral));
    c.drift = -0.5 * b;
    c.diffusion = std::sqrt(b);
    return c;
  }
  c.alpha = 1.0;
  c.drift = 0.0;
  switch (p.profile) {
    case VeProfile::linear:
      c.sigma = p.sigma_max * tau;
      c.diffusion = std::sqrt(2.0 * p.sigma_max * p.sigma_max * tau);
      break;
    case VeProfile::quadratic:
      c.sigma = p.sigma_max * tau * tau;
      c.diffusion = std::sqrt(4.0 * p.sigma_max * p.sigma_max * tau * tau * tau);
      break;
    case VeProfile::exponential: {
      const double log_ratio = std::log(p.sigma_max / p.sigma_min);
      const double growth = std::exp(2.0 * tau * log_ratio);
      c.sigma = p.sigma_min * std::sqrt(std::expm1(2.0 * tau * log_ratio));
      c.diffusion = p.sigma_min * std::sqrt(2.0 * log_ratio * growth);
      break;
    }
  }
  return c;
}

DiffusionSchedule::DiffusionSchedule(ScheduleParams params, int steps)
    : params_(params), steps_(steps), delta_(1.0 / static_cast<double>(steps)) {
  if (steps < 1) throw std::invalid_argument("schedule: T must be >= 1");
  if (params.kind == ScheduleKind::vp) {
    if (!(params.b_min > 0.0 && params.b_min < params.b_max))
      throw std::invalid_argument("schedule: VP requires 0 < b_min < b_max");
  } else {
    if (!(params.sigma_max > 0.0))
      throw std::invalid_argument("schedule: VE requires sigma_max > 0");
    if (params.profile == VeProfile::exponential &&
        !(params.sigma_min > 0.0 && params.sigma_min < params.sigma_max))
      throw std::invalid_argument("schedule: exponential VE requires 0 < sigma_min < sigma_max");
  }
  alpha_.resize(steps + 1);
  sigma_.resize(steps + 1);
  drift_.resize(steps + 1);
  diffusion_.resize(steps + 1);
  for (int t = 0; t <= steps; ++t) {
    const auto c = at(params, tau(t));
    alpha_(t) = c.alpha;
    sigma_(t) = c.sigma;
    drift_(t) = c.drift;
    diffusion_(t) = c.diffusion;
  }
  sigma_(0) = 0.0;
  alpha_(0) = 1.0;
}

double DiffusionSchedule::reference_variance() const {
  if (params_.kind == ScheduleKind::vp) return 1.0;
  return sigma_(steps_) * sigma_(steps_);
}

DiffusionSchedule build_schedule(const ScheduleParams& params, int steps) {
  return DiffusionSchedule(params, steps);
}

double forward_kernel_logpdf(const DiffusionSchedule& s, int t,
                             const ConstVectorRef& x_t, const ConstVectorRef& x_next) {
  if (t < 0 || t >= s.steps()) throw std::out_of_range("forward kernel: t out of range");
  const double g = s.diffusion(t);
  if (!(g > 0.0)) throw std::domain_error("forward kernel: g_t = 0");
  const double var = g * g * s.delta();
  return isotropic_normal_logpdf(x_next, x_t * (1.0 + s.drift(t) * s.delta()), var);
}

Vector reverse_mean(const DiffusionSchedule& s, int t, const ConstVectorRef& x_next,
                    const ConstVectorRef& score) {
  if (t < 0 || t >= s.steps()) throw std::out_of_range("reverse kernel: t out of range");
  const double f = s.drift(t + 1);
  const double g2 = s.diffusion(t + 1) * s.diffusion(t + 1);
  return x_next - (f * x_next - g2 * score) * s.delta();
}

double reverse_variance(const DiffusionSchedule& s, int t) {
  const double g = s.diffusion(t + 1);
  return g * g * s.delta();
}

double reverse_proposal_logpdf(const DiffusionSchedule& s, int t,
                               const ConstVectorRef& x_next, const ConstVectorRef& score,
                               const ConstVectorRef& x_t) {
  return isotropic_normal_logpdf(x_t, reverse_mean(s, t, x_next, score),
                                 reverse_variance(s, t));
}

double reverse_proposal(const DiffusionSchedule& s, int t, const ConstVectorRef& x_next,
                        const ConstVectorRef& score, RngStream& rng, VectorRef out) {
  if (!score.allFinite()) throw std::domain_error("reverse proposal: non-finite score");
  const Vector mean = reverse_mean(s, t, x_next, score);
  const double var = reverse_variance(s, t);
  const double sd = std::sqrt(var);
  double sq = 0.0;
  for (Index j = 0; j < out.size(); ++j) {
    const double z = rng.normal();
    sq += z * z;
    out(j) = mean(j) + sd * z;
  }
  const double d = static_cast<double>(out.size());
  return -0.5 * d * (kLogTwoPi + std::log(var)) - 0.5 * sq;
}

double reference_logpdf(const DiffusionSchedule& s, const ConstVectorRef& x) {
  const double var = s.reference_variance();
  return -0.5 * static_cast<double>(x.size()) * (kLogTwoPi + std::log(var)) -
         0.5 * x.squaredNorm() / var;
}

void reference_sample(const DiffusionSchedule& s, RngStream& rng, VectorRef out) {
  const double sd = std::sqrt(s.reference_variance());
  for (Index j = 0; j < out.size(); ++j) out(j) = sd * rng.normal();
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::vp ? "vp" : "ve"; }

std::string to_string(VeProfile profile) {
  switch (profile) {
    case VeProfile::linear: return "linear";
    case VeProfile::quadratic: return "quadratic";
    case VeProfile::exponential: return "exponential";
  }
  return "?";
}

}  // namespace rdsmc
