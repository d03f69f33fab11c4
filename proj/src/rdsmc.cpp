#include "rdsmc/rdsmc.hpp"

#include <stdexcept>

namespace rdsmc {

namespace {

double sanitize(double lw) { return std::isnan(lw) ? kNegInf : lw; }

double nan_mean(const Vector& v) {
  double acc = 0.0;
  Index n = 0;
  for (Index i = 0; i < v.size(); ++i)
    if (!std::isnan(v(i))) {
      acc += v(i);
      ++n;
    }
  return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

Vector gather(const Vector& v, const std::vector<Index>& anc) {
  Vector out(static_cast<Index>(anc.size()));
  for (std::size_t i = 0; i < anc.size(); ++i) out(static_cast<Index>(i)) = v(anc[i]);
  return out;
}

/// Running average that ignores NaN entries.
struct Average {
  double sum = 0.0;
  long count = 0;
  void add(double v) {
    if (std::isnan(v)) return;
    sum += v;
    ++count;
  }
  double value() const {
    return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
  }
};

}  // namespace

Vector no_resample_adjustment(const Vector& log_weights) {
  const double lse = log_sum_exp(log_weights);
  return (log_weights.array() - lse + std::log(static_cast<double>(log_weights.size())))
      .matrix();
}

bool should_resample(int t, int t_start, double kappa, double ess_fraction) {
  if (t > t_start) return false;
  return kappa >= 1.0 || ess_fraction < kappa;
}

void validate_outer_config(const OuterConfig& o, int steps) {
  if (o.n_particles < 1) throw std::invalid_argument("outer: N must be >= 1");
  if (!(o.kappa >= 0.0 && o.kappa <= 1.0))
    throw std::invalid_argument("outer: kappa must lie in [0, 1]");
  if (o.t_start && (*o.t_start < 0 || *o.t_start > steps))
    throw std::invalid_argument("outer: t_start must lie in [0, T]");
  if (o.workers < 1) throw std::invalid_argument("outer: workers must be >= 1");
}

RunResult run_rdsmc(const Target& target, const DiffusionSchedule& schedule,
                    const OuterConfig& outer, const InnerConfig& inner, std::uint64_t seed) {
  const int T = schedule.steps();
  validate_outer_config(outer, T);
  validate_inner_config(inner, target);
  const Index N = outer.n_particles;
  const Index d = target.dim();
  const int t_start = outer.t_start.value_or(T);
  const bool may_resample = outer.variant == Variant::full;
  const double log_n = std::log(static_cast<double>(N));

  ParticleSystem ps(N, d);
  ps.scores = ParticleMatrix::Zero(N, d);
  ps.log_marginals = Vector::Zero(N);
  ps.step = T;
  TrajectoryTerms terms{Vector::Zero(N), Vector::Zero(N), Vector::Zero(N),
                        Vector::Zero(N), Vector::Zero(N)};
  Vector inner_ess = Vector::Constant(N, std::numeric_limits<double>::quiet_NaN());
  Vector inner_acc = inner_ess;
  std::vector<char> dead(static_cast<std::size_t>(N), 0);

  RunResult res;
  Average ess_avg, acc_avg;
  double log_z = 0.0;

  auto finish_step = [&](int t, bool resampled) {
    StepDiagnostics diag;
    diag.t = t;
    diag.resampled = resampled;
    diag.mean_inner_ess = nan_mean(inner_ess);
    diag.mean_acceptance = nan_mean(inner_acc);
    for (Index i = 0; i < N; ++i) {
      ess_avg.add(inner_ess(i));
      acc_avg.add(inner_acc(i));
      diag.dead_particles += dead[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    const double lse = log_sum_exp(ps.log_weights);
    if (!std::isfinite(lse)) {
      diag.ess = 0.0;
      res.trace.push_back(diag);
      res.degenerate = true;
      res.failure = "all particle weights vanished at step " + std::to_string(t);
      return false;
    }
    diag.ess = ps.effective_sample_size();
    res.trace.push_back(diag);
    log_z += lse - log_n;
    return true;
  };

  // Initial step: x_T from the reference, weight p^(x_T, u_T) / p(x_T).
  parallel_for(N, outer.workers, [&](Index i, int) {
    const auto ui = static_cast<std::uint64_t>(i);
    RngStream r(seed, {static_cast<std::uint64_t>(T), ui, purpose::reference});
    Vector x(d);
    reference_sample(schedule, r, x);
    ps.positions.row(i) = x.transpose();
    const double lref = reference_logpdf(schedule, x);
    terms.log_reference(i) = lref;
    try {
      const RngStream ri(seed, {static_cast<std::uint64_t>(T), ui, purpose::inner});
      const InnerEstimate est =
          inner_estimate(target, schedule.alpha(T), schedule.sigma(T), x, inner, ri);
      ps.scores->row(i) = est.score.transpose();
      (*ps.log_marginals)(i) = est.log_marginal;
      inner_ess(i) = est.ess;
      inner_acc(i) = est.acceptance;
      const double lw = sanitize(initial_log_weight(est.log_marginal, lref));
      ps.log_weights(i) = lw;
      terms.sum_log_increments(i) = lw;
      dead[static_cast<std::size_t>(i)] = lw == kNegInf;
    } catch (const DegenerateError&) {
      ps.log_weights(i) = kNegInf;
      (*ps.log_marginals)(i) = kNegInf;
      dead[static_cast<std::size_t>(i)] = 1;
    } catch (const std::domain_error&) {
      ps.log_weights(i) = kNegInf;
      (*ps.log_marginals)(i) = kNegInf;
      dead[static_cast<std::size_t>(i)] = 1;
    }
  });
  bool alive = finish_step(T, false);

  for (int t = T - 1; t >= 0 && alive; --t) {
    bool resampled = false;
    Vector adjustment;
    const double ess_fraction = ps.effective_sample_size() / static_cast<double>(N);
    if (may_resample && should_resample(t, t_start, outer.kappa, ess_fraction)) {
      RngStream rr(seed, {static_cast<std::uint64_t>(t), 0, purpose::resample});
      const Vector w = ps.normalized_weights();
      const auto anc = outer.scheme == ResampleScheme::systematic
                           ? systematic_resample(w, rr.uniform(), N)
                           : multinomial_resample(w, rr, N);
      ps.resample(anc);
      terms.log_reference = gather(terms.log_reference, anc);
      terms.sum_log_forward = gather(terms.sum_log_forward, anc);
      terms.sum_log_proposal = gather(terms.sum_log_proposal, anc);
      terms.sum_log_increments = gather(terms.sum_log_increments, anc);
      adjustment = Vector::Zero(N);
      resampled = true;
      ++res.resample_events;
    } else if (outer.variant == Variant::proposal_only) {
      adjustment = Vector::Zero(N);  // weights are discarded; keep every particle moving
    } else {
      adjustment = no_resample_adjustment(ps.log_weights);
    }

    const ParticleMatrix prev = ps.positions;
    const ParticleMatrix prev_scores = *ps.scores;
    const Vector prev_lm = *ps.log_marginals;
    inner_ess.setConstant(std::numeric_limits<double>::quiet_NaN());
    inner_acc.setConstant(std::numeric_limits<double>::quiet_NaN());

    parallel_for(N, outer.workers, [&](Index i, int) {
      const auto ui = static_cast<std::uint64_t>(i);
      const auto si = static_cast<std::size_t>(i);
      if (adjustment(i) == kNegInf || prev_lm(i) == kNegInf) {
        ps.log_weights(i) = kNegInf;
        (*ps.log_marginals)(i) = kNegInf;
        dead[si] = 1;
        return;
      }
      try {
        RngStream rp(seed, {static_cast<std::uint64_t>(t), ui, purpose::propagate});
        const Vector x_next = prev.row(i).transpose();
        const Vector s_next = prev_scores.row(i).transpose();
        Vector x(d);
        const double lq = reverse_proposal(schedule, t, x_next, s_next, rp, x);
        const double lf = forward_kernel_logpdf(schedule, t, x, x_next);
        ps.positions.row(i) = x.transpose();
        double lm;
        if (t > 0) {
          const RngStream ri(seed, {static_cast<std::uint64_t>(t), ui, purpose::inner});
          const InnerEstimate est =
              inner_estimate(target, schedule.alpha(t), schedule.sigma(t), x, inner, ri);
          ps.scores->row(i) = est.score.transpose();
          inner_ess(i) = est.ess;
          inner_acc(i) = est.acceptance;
          lm = est.log_marginal;
        } else {
          lm = target.log_density(x);
          terms.log_target(i) = lm;
        }
        (*ps.log_marginals)(i) = lm;
        const double incr = intermediate_log_weight(lm, lf, prev_lm(i), lq);
        terms.sum_log_forward(i) += lf;
        terms.sum_log_proposal(i) += lq;
        terms.sum_log_increments(i) += incr;
        const double lw = sanitize(adjustment(i) + incr);
        ps.log_weights(i) = lw;
        dead[si] = lw == kNegInf;
      } catch (const DegenerateError&) {
        ps.log_weights(i) = kNegInf;
        (*ps.log_marginals)(i) = kNegInf;
        dead[si] = 1;
      } catch (const std::domain_error&) {
        ps.log_weights(i) = kNegInf;
        (*ps.log_marginals)(i) = kNegInf;
        dead[si] = 1;
      }
    });
    ps.step = t;
    alive = finish_step(t, resampled);
  }

  res.positions = ps.positions;
  res.terms = std::move(terms);
  res.mean_inner_ess = ess_avg.value();
  res.mean_acceptance = acc_avg.value();
  if (res.degenerate) {
    res.weights = Vector::Constant(N, 1.0 / static_cast<double>(N));
    res.log_z = kNegInf;
    if (outer.variant == Variant::proposal_only) res.log_z.reset();
    return res;
  }
  if (outer.variant == Variant::proposal_only) {
    res.weights = Vector::Constant(N, 1.0 / static_cast<double>(N));
  } else {
    res.weights = ps.normalized_weights();
    res.log_z = log_z;
  }
  return res;
}

std::string to_string(ResampleScheme s) {
  return s == ResampleScheme::systematic ? "systematic" : "multinomial";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::is_only: return "is_only";
    case Variant::proposal_only: return "proposal_only";
  }
  return "?";
}

ResampleScheme scheme_from_string(const std::string& s) {
  if (s == "systematic") return ResampleScheme::systematic;
  if (s == "multinomial") return ResampleScheme::multinomial;
  throw std::invalid_argument("unknown resampling scheme '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "is_only") return Variant::is_only;
  if (s == "proposal_only") return Variant::proposal_only;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

}  // namespace rdsmc
