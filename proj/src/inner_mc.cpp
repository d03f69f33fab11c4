#include "rdsmc/inner_mc.hpp"

#include <stdexcept>

#include "rdsmc/diffusion.hpp"

namespace rdsmc {

namespace {

constexpr std::uint64_t kLevelResampleSlot = ~std::uint64_t{0};

double sanitize(double lw) { return std::isnan(lw) ? kNegInf : lw; }

/// Shared body of the IS and AIS estimators. With n_steps == 1 no MCMC move
/// is made and the result is plain importance sampling.
InnerEstimate run_inner(const Target& target, double alpha, double sigma,
                        const ConstVectorRef& x, const InnerConfig& cfg, const RngStream& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("inner estimator: sigma_t must be positive");
  if (cfg.n_is < 1) throw std::invalid_argument("inner estimator: n_is must be >= 1");
  if (cfg.n_steps < 1) throw std::invalid_argument("inner estimator: n_steps must be >= 1");
  const Index d = x.size();
  const Index n = cfg.n_is;
  const int levels = cfg.n_steps;
  const bool annealed = levels > 1;
  const bool resample = cfg.estimator == InnerEstimator::ais_resample && annealed;
  const bool identity_grad = cfg.identity != ScoreIdentity::dsi;
  const bool need_grad = annealed || identity_grad;
  const double s2 = sigma * sigma;

  const GaussianProposal q = inner_proposal(cfg, x, alpha, sigma);
  const double beta1 = 1.0 / static_cast<double>(levels);

  std::vector<BridgePoint> pts(static_cast<std::size_t>(n), BridgePoint(d));
  ParticleMatrix grad_target(need_grad ? n : 0, d);
  Vector lw(n);
  Vector g(d);
  for (Index m = 0; m < n; ++m) {
    BridgePoint& p = pts[static_cast<std::size_t>(m)];
    RngStream r = rng.fork({0, static_cast<std::uint64_t>(m)});
    q.sample(r, p.x);
    const double lq = q.logpdf(p.x);
    double lt;
    if (need_grad) {
      lt = target.log_density_grad(p.x, g);
      grad_target.row(m) = g.transpose();
    } else {
      lt = target.log_density(p.x);
    }
    const double lik = isotropic_normal_logpdf(x, alpha * p.x, s2);
    const double lg = lt + lik;
    lw(m) = sanitize(beta1 * (lg - lq));
    if (annealed) {
      p.log_base = lq;
      p.grad_base = (q.mean - p.x) / q.variance;
      p.log_end = lg;
      p.grad_end = g + alpha * (x - alpha * p.x) / s2;
    }
  }

  double log_z_prefix = 0.0;
  long moves = 0, accepted = 0;
  if (annealed) {
    if (!(cfg.kernel.step > 0.0))
      throw std::invalid_argument("inner estimator: MCMC step size must be positive");
    const Vector xv = x;
    auto base = [&q](const Vector& u, Vector& grad) {
      grad = (q.mean - u) / q.variance;
      return q.logpdf(u);
    };
    auto end = [&target, &xv, alpha, s2](const Vector& u, Vector& grad) {
      const double lt = target.log_density_grad(u, grad);
      grad += alpha * (xv - alpha * u) / s2;
      return lt + isotropic_normal_logpdf(xv, alpha * u, s2);
    };
    auto bridge = make_bridge(base, end, 0.0);
    McmcWorkspace ws(d);
    for (int k = 1; k < levels; ++k) {
      if (resample) {
        log_z_prefix += log_mean_exp(lw);
        if (!std::isfinite(log_z_prefix))
          throw DegenerateError("inner AIS: all weights vanished");
        const Vector w = normalize_log_weights(lw);
        RngStream ru = rng.fork({static_cast<std::uint64_t>(k), kLevelResampleSlot});
        const auto anc = systematic_resample(w, ru.uniform(), n);
        std::vector<BridgePoint> next;
        next.reserve(pts.size());
        for (Index a : anc) next.push_back(pts[static_cast<std::size_t>(a)]);
        pts = std::move(next);
        lw.setZero();
      }
      const double beta = static_cast<double>(k) / levels;
      const double beta_next = static_cast<double>(k + 1) / levels;
      bridge.set_beta(beta);
      for (Index m = 0; m < n; ++m) {
        BridgePoint& p = pts[static_cast<std::size_t>(m)];
        RngStream r = rng.fork({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(m)});
        for (int s = 0; s < cfg.m_steps; ++s) {
          accepted += mcmc_transition(bridge, cfg.kernel, p, r, ws) ? 1 : 0;
          ++moves;
        }
        lw(m) = sanitize(lw(m) + (beta_next - beta) * (p.log_end - p.log_base));
      }
    }
    if (identity_grad)
      for (Index m = 0; m < n; ++m) {
        target.log_density_grad(pts[static_cast<std::size_t>(m)].x, g);
        grad_target.row(m) = g.transpose();
      }
  }

  InnerEstimate est;
  const double lme = log_mean_exp(lw);
  if (!std::isfinite(lme)) throw DegenerateError("inner estimator: all weights vanished");
  est.log_marginal = log_z_prefix + lme;
  WeightedPosterior post;
  post.weights = normalize_log_weights(lw);
  post.u.resize(n, d);
  for (Index m = 0; m < n; ++m) post.u.row(m) = pts[static_cast<std::size_t>(m)].x.transpose();
  if (identity_grad) post.grad_log_target = std::move(grad_target);
  est.ess = ess(post.weights);
  est.acceptance = moves > 0 ? static_cast<double>(accepted) / static_cast<double>(moves)
                             : std::numeric_limits<double>::quiet_NaN();
  est.score = combine_identity(cfg.identity, post, x, alpha, sigma);
  return est;
}

}  // namespace

double GaussianProposal::logpdf(const ConstVectorRef& u) const {
  return isotropic_normal_logpdf(u, mean, variance);
}

void GaussianProposal::sample(RngStream& rng, VectorRef out) const {
  const double sd = std::sqrt(variance);
  for (Index j = 0; j < out.size(); ++j) out(j) = mean(j) + sd * rng.normal();
}

GaussianProposal inner_proposal(const InnerConfig& cfg, const ConstVectorRef& x, double alpha,
                                double sigma) {
  if (!(alpha > 0.0)) throw std::domain_error("inner proposal: alpha_t must be positive");
  const double s2 = sigma * sigma;
  switch (cfg.proposal) {
    case InnerProposal::reversed_kernel:
      return {x / alpha, s2 / (alpha * alpha)};
    case InnerProposal::centered:
      return {x, s2 / (alpha * alpha)};
    case InnerProposal::gaussian_approx: {
      if (!(cfg.approx_variance > 0.0))
        throw std::invalid_argument("inner proposal: approx_variance must be positive");
      const Vector m0 = cfg.approx_mean.size() ? cfg.approx_mean : Vector::Zero(x.size());
      if (m0.size() != x.size())
        throw std::invalid_argument("inner proposal: approx_mean has the wrong dimension");
      const double precision = 1.0 / cfg.approx_variance + alpha * alpha / s2;
      return {(m0 / cfg.approx_variance + alpha * x / s2) / precision, 1.0 / precision};
    }
  }
  throw std::logic_error("inner proposal: unknown kind");
}

Vector clip_score(const ConstVectorRef& score, double threshold) {
  const double norm = score.norm();
  if (norm > threshold) return score * (threshold / norm);
  return score;
}

Vector combine_identity(ScoreIdentity identity, const WeightedPosterior& post,
                        const ConstVectorRef& x, double alpha, double sigma) {
  const Index n = post.u.rows();
  const double s2 = sigma * sigma;
  if (identity != ScoreIdentity::dsi && post.grad_log_target.rows() != n)
    throw std::invalid_argument("score identity: target gradients are required");
  Vector out = Vector::Zero(x.size());
  switch (identity) {
    case ScoreIdentity::dsi:
      for (Index m = 0; m < n; ++m)
        out += post.weights(m) * (alpha * post.u.row(m).transpose() - x) / s2;
      break;
    case ScoreIdentity::tsi:
      for (Index m = 0; m < n; ++m)
        out += post.weights(m) * post.grad_log_target.row(m).transpose() / alpha;
      break;
    case ScoreIdentity::msi:
      for (Index m = 0; m < n; ++m)
        out += post.weights(m) *
               (alpha * (post.u.row(m) + post.grad_log_target.row(m)).transpose() - x);
      out /= alpha * alpha + s2;
      break;
  }
  return out;
}

InnerEstimate is_estimate(const Target& target, double alpha, double sigma,
                          const ConstVectorRef& x, const InnerConfig& config,
                          const RngStream& rng) {
  InnerConfig cfg = config;
  cfg.estimator = InnerEstimator::is;
  cfg.n_steps = 1;
  return run_inner(target, alpha, sigma, x, cfg, rng);
}

InnerEstimate ais_estimate(const Target& target, double alpha, double sigma,
                           const ConstVectorRef& x, const InnerConfig& config,
                           const RngStream& rng) {
  return run_inner(target, alpha, sigma, x, config, rng);
}

InnerEstimate inner_estimate(const Target& target, double alpha, double sigma,
                             const ConstVectorRef& x, const InnerConfig& config,
                             const RngStream& rng) {
  InnerEstimate est = config.estimator == InnerEstimator::is
                          ? is_estimate(target, alpha, sigma, x, config, rng)
                          : ais_estimate(target, alpha, sigma, x, config, rng);
  if (config.score_clip) est.score = clip_score(est.score, *config.score_clip);
  if (config.log_marginal_clamp)
    est.log_marginal = std::clamp(est.log_marginal, config.log_marginal_clamp->first,
                                  config.log_marginal_clamp->second);
  return est;
}

void validate_inner_config(const InnerConfig& c, const Target& target) {
  if (c.n_is < 1) throw std::invalid_argument("inner: n_is must be >= 1");
  if (c.n_steps < 1) throw std::invalid_argument("inner: n_steps must be >= 1");
  if (c.estimator == InnerEstimator::is && c.n_steps != 1)
    throw std::invalid_argument("inner: the IS estimator requires n_steps = 1");
  if (c.n_steps > 1) {
    if (c.m_steps < 1) throw std::invalid_argument("inner: m_steps must be >= 1");
    if (!(c.kernel.step > 0.0)) throw std::invalid_argument("inner: step size must be positive");
    if (c.kernel.kind == KernelKind::hmc && c.kernel.leapfrog < 1)
      throw std::invalid_argument("inner: leapfrog steps must be >= 1");
    if (!target.has_gradient())
      throw std::invalid_argument("inner: annealed estimators need a target gradient");
  }
  if (c.identity != ScoreIdentity::dsi && !target.has_gradient())
    throw std::invalid_argument("inner: " + to_string(c.identity) +
                                " needs a target gradient");
  if (c.score_clip && !(*c.score_clip > 0.0))
    throw std::invalid_argument("inner: score_clip must be positive");
  if (c.proposal == InnerProposal::gaussian_approx) {
    if (!(c.approx_variance > 0.0))
      throw std::invalid_argument("inner: approx_variance must be positive");
    if (c.approx_mean.size() && c.approx_mean.size() != target.dim())
      throw std::invalid_argument("inner: approx_mean has the wrong dimension");
  }
  if (c.log_marginal_clamp && !(c.log_marginal_clamp->first <= c.log_marginal_clamp->second))
    throw std::invalid_argument("inner: clamp bounds are reversed");
}

std::string to_string(InnerEstimator e) {
  switch (e) {
    case InnerEstimator::is: return "is";
    case InnerEstimator::ais: return "ais";
    case InnerEstimator::ais_resample: return "ais_resample";
  }
  return "?";
}

std::string to_string(ScoreIdentity s) {
  switch (s) {
    case ScoreIdentity::dsi: return "dsi";
    case ScoreIdentity::tsi: return "tsi";
    case ScoreIdentity::msi: return "msi";
  }
  return "?";
}

std::string to_string(InnerProposal p) {
  switch (p) {
    case InnerProposal::reversed_kernel: return "reversed_kernel";
    case InnerProposal::centered: return "centered";
    case InnerProposal::gaussian_approx: return "gaussian_approx";
  }
  return "?";
}

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::ula: return "ula";
    case KernelKind::mala: return "mala";
    case KernelKind::hmc: return "hmc";
  }
  return "?";
}

InnerEstimator estimator_from_string(const std::string& s) {
  if (s == "is") return InnerEstimator::is;
  if (s == "ais") return InnerEstimator::ais;
  if (s == "ais_resample") return InnerEstimator::ais_resample;
  throw std::invalid_argument("unknown inner estimator '" + s + "'");
}

ScoreIdentity identity_from_string(const std::string& s) {
  if (s == "dsi") return ScoreIdentity::dsi;
  if (s == "tsi") return ScoreIdentity::tsi;
  if (s == "msi") return ScoreIdentity::msi;
  throw std::invalid_argument("unknown score identity '" + s + "'");
}

InnerProposal proposal_from_string(const std::string& s) {
  if (s == "reversed_kernel") return InnerProposal::reversed_kernel;
  if (s == "centered") return InnerProposal::centered;
  if (s == "gaussian_approx") return InnerProposal::gaussian_approx;
  throw std::invalid_argument("unknown inner proposal '" + s + "'");
}

KernelKind kernel_from_string(const std::string& s) {
  if (s == "ula") return KernelKind::ula;
  if (s == "mala") return KernelKind::mala;
  if (s == "hmc") return KernelKind::hmc;
  throw std::invalid_argument("unknown MCMC kernel '" + s + "'");
}

}  // namespace rdsmc
