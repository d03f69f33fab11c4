#include "rdsmc/targets.hpp"

#include <numbers>
#include <stdexcept>

#include "rdsmc/diffusion.hpp"

namespace rdsmc {

namespace {

void check_dim(const Target& t, const ConstVectorRef& x) {
  if (x.size() != t.dim())
    throw std::invalid_argument(t.name() + ": expected dimension " + std::to_string(t.dim()) +
                                ", got " + std::to_string(x.size()));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

// ---- Gaussian ----

GaussianTarget::GaussianTarget(Vector mean, double variance, double log_scale)
    : mean_(std::move(mean)), variance_(variance), log_scale_(log_scale) {
  if (mean_.size() < 1) throw std::invalid_argument("gaussian: dimension must be >= 1");
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian: variance must be positive");
}

double GaussianTarget::log_density(const ConstVectorRef& x) const {
  check_dim(*this, x);
  return log_scale_ + isotropic_normal_logpdf(x, mean_, variance_);
}

double GaussianTarget::log_density_grad(const ConstVectorRef& x, VectorRef grad) const {
  check_dim(*this, x);
  grad = (mean_ - x) / variance_;
  return log_scale_ + isotropic_normal_logpdf(x, mean_, variance_);
}

std::optional<ParticleMatrix> GaussianTarget::sample(Index n, RngStream& rng) const {
  ParticleMatrix out(n, dim());
  const double sd = std::sqrt(variance_);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim(); ++j) out(i, j) = mean_(j) + sd * rng.normal();
  return out;
}

// ---- GMM ----

GmmTarget::GmmTarget(Vector m1, Vector m2, double variance, double w1, double w2)
    : m1_(std::move(m1)), m2_(std::move(m2)), variance_(variance), w1_(w1), w2_(w2) {
  if (m1_.size() < 1 || m1_.size() != m2_.size())
    throw std::invalid_argument("gmm: means must share a dimension >= 1");
  if (!(variance > 0.0)) throw std::invalid_argument("gmm: variance must be positive");
  if (!(w1 > 0.0 && w2 > 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw std::invalid_argument("gmm: weights must be positive and sum to 1");
}

double GmmTarget::component_log_density(int k, const ConstVectorRef& x) const {
  return std::log(weight(k)) + isotropic_normal_logpdf(x, mean(k), variance_);
}

double GmmTarget::log_density(const ConstVectorRef& x) const {
  check_dim(*this, x);
  const Eigen::Vector2d c(component_log_density(0, x), component_log_density(1, x));
  return log_sum_exp(c);
}

double GmmTarget::log_density_grad(const ConstVectorRef& x, VectorRef grad) const {
  check_dim(*this, x);
  const Eigen::Vector2d c(component_log_density(0, x), component_log_density(1, x));
  const double lse = log_sum_exp(c);
  const double r0 = std::exp(c(0) - lse);
  const double r1 = std::exp(c(1) - lse);
  grad = (r0 * (m1_ - x) + r1 * (m2_ - x)) / variance_;
  return lse;
}

std::optional<ParticleMatrix> GmmTarget::sample(Index n, RngStream& rng) const {
  ParticleMatrix out(n, dim());
  const double sd = std::sqrt(variance_);
  for (Index i = 0; i < n; ++i) {
    const Vector& m = rng.uniform() < w1_ ? m1_ : m2_;
    for (Index j = 0; j < dim(); ++j) out(i, j) = m(j) + sd * rng.normal();
  }
  return out;
}

GmmTarget gmm_generate(Index d, std::uint64_t seed, double box_width) {
  if (d < 1) throw std::invalid_argument("gmm_generate: d must be >= 1");
  RngStream rng(seed, {purpose::target});
  Vector m1(d), m2(d);
  for (Index j = 0; j < d; ++j) m1(j) = box_width * (rng.uniform() - 0.5);
  for (Index j = 0; j < d; ++j) m2(j) = box_width * (rng.uniform() - 0.5);
  return GmmTarget(std::move(m1), std::move(m2));
}

// ---- Rings ----

namespace {

Eigen::Array<double, RingsTarget::kRings, 1> ring_log_terms(double r) {
  Eigen::Array<double, RingsTarget::kRings, 1> c;
  const double s2 = RingsTarget::kRadialStd * RingsTarget::kRadialStd;
  const double log_w = -std::log(static_cast<double>(RingsTarget::kRings));
  for (int k = 0; k < RingsTarget::kRings; ++k) {
    const double diff = r - (k + 1);
    c(k) = log_w - 0.5 * (kLogTwoPi + std::log(s2)) - 0.5 * diff * diff / s2;
  }
  return c;
}

}  // namespace

double RingsTarget::radial_log_density(double r) { return log_sum_exp(ring_log_terms(r)); }

double RingsTarget::radial_cdf(double r) {
  double acc = 0.0;
  for (int k = 0; k < kRings; ++k) acc += normal_cdf((r - (k + 1)) / kRadialStd);
  return acc / kRings;
}

double RingsTarget::log_density(const ConstVectorRef& x) const {
  check_dim(*this, x);
  const double r = x.norm();
  if (r == 0.0) return kNegInf;
  return radial_log_density(r) - std::log(2.0 * std::numbers::pi * r);
}

double RingsTarget::log_density_grad(const ConstVectorRef& x, VectorRef grad) const {
  check_dim(*this, x);
  const double r = x.norm();
  if (r == 0.0) throw std::domain_error("rings: gradient undefined at the origin");
  const auto c = ring_log_terms(r);
  const double lse = log_sum_exp(c);
  const double s2 = kRadialStd * kRadialStd;
  double dlog_pr = 0.0;
  for (int k = 0; k < kRings; ++k) dlog_pr += std::exp(c(k) - lse) * (-(r - (k + 1)) / s2);
  grad = (dlog_pr - 1.0 / r) * x / r;
  return lse - std::log(2.0 * std::numbers::pi * r);
}

std::optional<ParticleMatrix> RingsTarget::sample(Index n, RngStream& rng) const {
  ParticleMatrix out(n, 2);
  for (Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(rng.uniform() * kRings);
    double r;
    do {
      r = (k + 1) + kRadialStd * rng.normal();
    } while (r <= 0.0);
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    out(i, 0) = r * std::cos(theta);
    out(i, 1) = r * std::sin(theta);
  }
  return out;
}

// ---- Funnel ----

FunnelTarget::FunnelTarget(Index d, double scale_variance)
    : d_(d), scale_variance_(scale_variance) {
  if (d < 2) throw std::invalid_argument("funnel: d must be >= 2");
  if (!(scale_variance > 0.0)) throw std::invalid_argument("funnel: variance must be positive");
}

double FunnelTarget::log_density(const ConstVectorRef& x) const {
  check_dim(*this, x);
  const double x1 = x(0);
  const double rest = static_cast<double>(d_ - 1);
  return -0.5 * (kLogTwoPi + std::log(scale_variance_)) - 0.5 * x1 * x1 / scale_variance_ -
         0.5 * rest * (kLogTwoPi + x1) - 0.5 * x.tail(d_ - 1).squaredNorm() * std::exp(-x1);
}

double FunnelTarget::log_density_grad(const ConstVectorRef& x, VectorRef grad) const {
  check_dim(*this, x);
  const double x1 = x(0);
  const double inv_var = std::exp(-x1);
  const double sq = x.tail(d_ - 1).squaredNorm();
  const double rest = static_cast<double>(d_ - 1);
  grad(0) = -x1 / scale_variance_ - 0.5 * rest + 0.5 * sq * inv_var;
  grad.tail(d_ - 1) = -x.tail(d_ - 1) * inv_var;
  return -0.5 * (kLogTwoPi + std::log(scale_variance_)) - 0.5 * x1 * x1 / scale_variance_ -
         0.5 * rest * (kLogTwoPi + x1) - 0.5 * sq * inv_var;
}

std::optional<ParticleMatrix> FunnelTarget::sample(Index n, RngStream& rng) const {
  ParticleMatrix out(n, d_);
  const double sd1 = std::sqrt(scale_variance_);
  for (Index i = 0; i < n; ++i) {
    const double x1 = sd1 * rng.normal();
    out(i, 0) = x1;
    const double sd = std::exp(0.5 * x1);
    for (Index j = 1; j < d_; ++j) out(i, j) = sd * rng.normal();
  }
  return out;
}

// ---- Logistic regression ----

LogRegTarget::LogRegTarget(Eigen::MatrixXd features, Vector labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rows() != labels_.size())
    throw std::invalid_argument("logreg: feature rows and labels differ in length");
  for (Index j = 0; j < labels_.size(); ++j)
    if (labels_(j) != 0.0 && labels_(j) != 1.0)
      throw std::invalid_argument("logreg: labels must be 0 or 1");
}

double LogRegTarget::log_prior(const ConstVectorRef& params) const {
  const Index p = features_.cols();
  const double b = params(p);
  const double s2 = kInterceptStd * kInterceptStd;
  return -0.5 * static_cast<double>(p) * kLogTwoPi - 0.5 * params.head(p).squaredNorm() -
         0.5 * (kLogTwoPi + std::log(s2)) - 0.5 * b * b / s2;
}

double LogRegTarget::log_likelihood(const Eigen::MatrixXd& features, const Vector& labels,
                                    const ConstVectorRef& params) {
  const Index p = features.cols();
  if (params.size() != p + 1)
    throw std::invalid_argument("logreg: parameter dimension does not match features");
  const Vector z = (features * params.head(p)).array() + params(p);
  double acc = 0.0;
  for (Index j = 0; j < z.size(); ++j) acc -= softplus(-(2.0 * labels(j) - 1.0) * z(j));
  return acc;
}

double LogRegTarget::log_density(const ConstVectorRef& x) const {
  check_dim(*this, x);
  return log_prior(x) + log_likelihood(features_, labels_, x);
}

double LogRegTarget::log_density_grad(const ConstVectorRef& x, VectorRef grad) const {
  check_dim(*this, x);
  const Index p = features_.cols();
  const Vector z = (features_ * x.head(p)).array() + x(p);
  double ll = 0.0;
  Vector resid(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double sign = 2.0 * labels_(j) - 1.0;
    ll -= softplus(-sign * z(j));
    // y - sigmoid(z), written as sign * sigmoid(-sign z).
    resid(j) = sign / (1.0 + std::exp(sign * z(j)));
  }
  grad.head(p) = features_.transpose() * resid - x.head(p);
  grad(p) = resid.sum() - x(p) / (kInterceptStd * kInterceptStd);
  return log_prior(x) + ll;
}

double GradientFreeTarget::log_density_grad(const ConstVectorRef&, VectorRef) const {
  throw std::logic_error(name() + ": target has no gradient");
}

}  // namespace rdsmc
