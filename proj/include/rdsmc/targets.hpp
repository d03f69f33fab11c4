#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rdsmc/core.hpp"

namespace rdsmc {

/// Unnormalized log-density log pi~(x) with its gradient.
class Target {
 public:
  virtual ~Target() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  virtual double log_density(const ConstVectorRef& x) const = 0;
  /// Writes grad log pi~(x) into `grad` and returns log pi~(x).
  virtual double log_density_grad(const ConstVectorRef& x, VectorRef grad) const = 0;

  virtual bool has_gradient() const { return true; }
  /// log Z when known in closed form.
  virtual std::optional<double> log_normalizer() const { return std::nullopt; }
  /// Exact draws from pi, when an analytic sampler exists.
  virtual std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const {
    (void)n;
    (void)rng;
    return std::nullopt;
  }
};

/// c * N(mean, variance I): log pi~ = log_scale + log N(x | mean, variance I).
class GaussianTarget final : public Target {
 public:
  GaussianTarget(Vector mean, double variance, double log_scale = 0.0);

  Index dim() const override { return mean_.size(); }
  std::string name() const override { return "gaussian"; }
  double log_density(const ConstVectorRef& x) const override;
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;
  std::optional<double> log_normalizer() const override { return log_scale_; }
  std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const override;

  const Vector& mean() const { return mean_; }
  double variance() const { return variance_; }
  double log_scale() const { return log_scale_; }

 private:
  Vector mean_;
  double variance_;
  double log_scale_;
};

/// Two-component isotropic Gaussian mixture w1 N(m1, s2 I) + w2 N(m2, s2 I).
class GmmTarget final : public Target {
 public:
  static constexpr double kWeight1 = 0.1;
  static constexpr double kWeight2 = 0.9;
  static double default_variance() { return 2.0 * std::log(2.0); }

  GmmTarget(Vector m1, Vector m2, double variance = default_variance(),
            double w1 = kWeight1, double w2 = kWeight2);

  Index dim() const override { return m1_.size(); }
  std::string name() const override { return "gmm"; }
  double log_density(const ConstVectorRef& x) const override;
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;
  std::optional<double> log_normalizer() const override { return 0.0; }
  std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const override;

  const Vector& mean(int k) const { return k == 0 ? m1_ : m2_; }
  double weight(int k) const { return k == 0 ? w1_ : w2_; }
  double variance() const { return variance_; }
  /// log w_k + log N(x | m_k, s2 I).
  double component_log_density(int k, const ConstVectorRef& x) const;

 private:
  Vector m1_, m2_;
  double variance_, w1_, w2_;
};

/// Means drawn i.i.d. uniform on [-box/2, box/2]^d from `seed`.
GmmTarget gmm_generate(Index d, std::uint64_t seed, double box_width = 80.0);

/// Radius ~ (1/4) sum_k N(k, 0.15^2), k = 1..4; angle ~ U[0, 2 pi).
/// Cartesian density p_r(r) p_theta(theta) / r.
class RingsTarget final : public Target {
 public:
  static constexpr int kRings = 4;
  static constexpr double kRadialStd = 0.15;

  Index dim() const override { return 2; }
  std::string name() const override { return "rings"; }
  double log_density(const ConstVectorRef& x) const override;
  /// Throws std::domain_error at the origin where the gradient is undefined.
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;
  std::optional<double> log_normalizer() const override { return 0.0; }
  std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const override;

  static double radial_log_density(double r);
  /// Mixture CDF of the radius.
  static double radial_cdf(double r);
};

/// Neal's funnel: x1 ~ N(0, 9), x_{2:d} | x1 ~ N(0, exp(x1) I).
class FunnelTarget final : public Target {
 public:
  explicit FunnelTarget(Index d = 10, double scale_variance = 9.0);

  Index dim() const override { return d_; }
  std::string name() const override { return "funnel"; }
  double log_density(const ConstVectorRef& x) const override;
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;
  std::optional<double> log_normalizer() const override { return 0.0; }
  std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const override;

 private:
  Index d_;
  double scale_variance_;
};

/// Bayesian logistic regression posterior over (w, b):
/// N(w; 0, I) N(b; 0, 2.5^2) prod_j Bernoulli(y_j; sigmoid(x_j' w + b)).
class LogRegTarget final : public Target {
 public:
  static constexpr double kInterceptStd = 2.5;

  LogRegTarget(Eigen::MatrixXd features, Vector labels);

  Index dim() const override { return features_.cols() + 1; }
  std::string name() const override { return "logreg"; }
  double log_density(const ConstVectorRef& x) const override;
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;

  double log_prior(const ConstVectorRef& params) const;
  /// sum over rows of log Bernoulli(y | sigmoid(x' w + b)).
  static double log_likelihood(const Eigen::MatrixXd& features, const Vector& labels,
                               const ConstVectorRef& params);

  const Eigen::MatrixXd& features() const { return features_; }
  const Vector& labels() const { return labels_; }

 private:
  Eigen::MatrixXd features_;
  Vector labels_;
};

/// Forwards to another target but reports no gradient.
class GradientFreeTarget final : public Target {
 public:
  explicit GradientFreeTarget(std::shared_ptr<const Target> inner) : inner_(std::move(inner)) {}
  Index dim() const override { return inner_->dim(); }
  std::string name() const override { return inner_->name() + "_nograd"; }
  double log_density(const ConstVectorRef& x) const override { return inner_->log_density(x); }
  double log_density_grad(const ConstVectorRef& x, VectorRef grad) const override;
  bool has_gradient() const override { return false; }
  std::optional<double> log_normalizer() const override { return inner_->log_normalizer(); }
  std::optional<ParticleMatrix> sample(Index n, RngStream& rng) const override {
    return inner_->sample(n, rng);
  }

 private:
  std::shared_ptr<const Target> inner_;
};

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace rdsmc
