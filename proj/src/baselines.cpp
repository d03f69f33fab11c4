#include "rdsmc/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace rdsmc {

namespace {

RunResult run_annealing(const Target& target, const AnnealConfig& cfg, std::uint64_t seed,
                        bool resampling) {
  validate_anneal_config(cfg);
  if (!target.has_gradient())
    throw std::invalid_argument("baseline: MALA moves need a target gradient");
  const Index N = cfg.n_particles;
  const Index d = target.dim();
  const double var0 = cfg.reference_variance();
  const double sd0 = std::sqrt(var0);
  const double log_n = std::log(static_cast<double>(N));

  auto base = [var0](const Vector& x, Vector& grad) {
    grad = -x / var0;
    return isotropic_normal_logpdf(x, Vector::Zero(x.size()), var0);
  };
  auto end = [&target](const Vector& x, Vector& grad) { return target.log_density_grad(x, grad); };

  std::vector<BridgePoint> pts(static_cast<std::size_t>(N), BridgePoint(d));
  {
    auto bridge = make_bridge(base, end, 0.0);
    parallel_for(N, cfg.workers, [&](Index i, int) {
      RngStream r(seed, {0, static_cast<std::uint64_t>(i), purpose::reference});
      BridgePoint& p = pts[static_cast<std::size_t>(i)];
      for (Index j = 0; j < d; ++j) p.x(j) = sd0 * r.normal();
      bridge.evaluate(p);
    });
  }

  RunResult res;
  Vector lw = Vector::Zero(N);
  Vector adjustment = Vector::Zero(N);
  std::vector<long> accepted(static_cast<std::size_t>(N));
  double log_z = 0.0;
  double step = cfg.step_init;
  const KernelParams kernel{KernelKind::mala, step, 0};
  double acc_sum = 0.0;

  for (int t = 1; t <= cfg.steps; ++t) {
    const double beta_prev = static_cast<double>(t - 1) / cfg.steps;
    const double beta = static_cast<double>(t) / cfg.steps;
    for (Index i = 0; i < N; ++i) {
      const BridgePoint& p = pts[static_cast<std::size_t>(i)];
      const double lw_i = adjustment(i) + (beta - beta_prev) * (p.log_end - p.log_base);
      lw(i) = std::isnan(lw_i) ? kNegInf : lw_i;
    }
    StepDiagnostics diag;
    diag.t = t;
    const double lse = log_sum_exp(lw);
    if (!std::isfinite(lse)) {
      res.trace.push_back(diag);
      res.degenerate = true;
      res.failure = "all particle weights vanished at level " + std::to_string(t);
      break;
    }
    log_z += lse - log_n;
    diag.ess = ess_from_log_weights(lw);
    if (resampling && t < cfg.steps &&
        (cfg.kappa >= 1.0 || diag.ess / static_cast<double>(N) < cfg.kappa)) {
      RngStream rr(seed, {static_cast<std::uint64_t>(t), 0, purpose::resample});
      const Vector w = normalize_log_weights(lw);
      const auto anc = cfg.scheme == ResampleScheme::systematic
                           ? systematic_resample(w, rr.uniform(), N)
                           : multinomial_resample(w, rr, N);
      std::vector<BridgePoint> next;
      next.reserve(pts.size());
      for (Index a : anc) next.push_back(pts[static_cast<std::size_t>(a)]);
      pts = std::move(next);
      lw.setZero();
      adjustment.setZero();
      diag.resampled = true;
      ++res.resample_events;
    } else {
      adjustment = no_resample_adjustment(lw);
    }

    KernelParams kp = kernel;
    kp.step = step;
    auto bridge = make_bridge(base, end, beta);
    parallel_for(N, cfg.workers, [&](Index i, int) {
      const auto si = static_cast<std::size_t>(i);
      accepted[si] = 0;
      if (lw(i) == kNegInf) return;
      RngStream r(seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i),
                         purpose::mcmc});
      McmcWorkspace ws(d);
      BridgePoint& p = pts[si];
      for (int s = 0; s < cfg.mcmc_steps; ++s)
        accepted[si] += mcmc_transition(bridge, kp, p, r, ws) ? 1 : 0;
    });
    long total = 0;
    for (long a : accepted) total += a;
    const double rate =
        static_cast<double>(total) / (static_cast<double>(N) * cfg.mcmc_steps);
    diag.mean_acceptance = rate;
    acc_sum += rate;
    step = adapt_step_size(step, rate, cfg.target_accept, cfg.adapt_rate);
    res.trace.push_back(diag);
  }

  res.positions.resize(N, d);
  for (Index i = 0; i < N; ++i) res.positions.row(i) = pts[static_cast<std::size_t>(i)].x.transpose();
  res.mean_acceptance = res.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : acc_sum / static_cast<double>(res.trace.size());
  if (res.degenerate) {
    res.weights = Vector::Constant(N, 1.0 / static_cast<double>(N));
    res.log_z = kNegInf;
  } else {
    res.weights = normalize_log_weights(lw);
    res.log_z = log_z;
  }
  return res;
}

}  // namespace

double adapt_step_size(double delta, double observed_accept, double target_accept,
                       double rate) {
  if (!(delta > 0.0)) throw std::invalid_argument("adapt_step_size: delta must be positive");
  return std::clamp(delta * std::exp(rate * (observed_accept - target_accept)), 1e-8, 1e3);
}

RunResult run_ais_baseline(const Target& target, const AnnealConfig& config,
                           std::uint64_t seed) {
  return run_annealing(target, config, seed, false);
}

RunResult run_smc_baseline(const Target& target, const AnnealConfig& config,
                           std::uint64_t seed) {
  return run_annealing(target, config, seed, config.kappa > 0.0);
}

BaselineScale default_baseline_scale(const Target& target) {
  if (const auto* g = dynamic_cast<const GmmTarget*>(&target))
    return {0.9 * (g->mean(0) - g->mean(1)).norm(), std::sqrt(g->variance())};
  if (dynamic_cast<const RingsTarget*>(&target))
    return {4.0, RingsTarget::kRadialStd};
  if (dynamic_cast<const FunnelTarget*>(&target)) return {2.12, 0.0};
  if (dynamic_cast<const LogRegTarget*>(&target)) return {LogRegTarget::kInterceptStd, 0.0};
  return {1.0, 0.0};
}

void validate_anneal_config(const AnnealConfig& c) {
  if (c.steps < 1) throw std::invalid_argument("anneal: steps must be >= 1");
  if (c.n_particles < 1) throw std::invalid_argument("anneal: N must be >= 1");
  if (c.mcmc_steps < 0) throw std::invalid_argument("anneal: mcmc_steps must be >= 0");
  if (!(c.step_init > 0.0)) throw std::invalid_argument("anneal: step_init must be positive");
  if (!(c.target_accept > 0.0 && c.target_accept < 1.0))
    throw std::invalid_argument("anneal: target_accept must lie in (0, 1)");
  if (!(c.kappa >= 0.0 && c.kappa <= 1.0))
    throw std::invalid_argument("anneal: kappa must lie in [0, 1]");
  if (!(c.reference_variance() > 0.0))
    throw std::invalid_argument("anneal: R^2 + tau^2 must be positive");
  if (c.workers < 1) throw std::invalid_argument("anneal: workers must be >= 1");
}

}  // namespace rdsmc
