#pragma once

#include <string>

#include "rdsmc/core.hpp"

namespace rdsmc {

enum class KernelKind { ula, mala, hmc };

struct KernelParams {
  KernelKind kind = KernelKind::mala;
  double step = 0.1;
  int leapfrog = 5;
};

/// A point on the geometric bridge (1 - beta) log base + beta log end,
/// with both endpoint log-densities and gradients cached.
struct BridgePoint {
  Vector x;
  double log_base = 0.0;
  double log_end = 0.0;
  Vector grad_base;
  Vector grad_end;

  explicit BridgePoint(Index d = 0)
      : x(Vector::Zero(d)), grad_base(Vector::Zero(d)), grad_end(Vector::Zero(d)) {}
};

/// (1 - beta) log_base + beta log_end.
inline double annealed_logpdf(double beta, double log_base, double log_end) {
  if (beta <= 0.0) return log_base;
  if (beta >= 1.0) return log_end;
  return (1.0 - beta) * log_base + beta * log_end;
}

/// Density proportional to base^(1 - beta) end^beta.
/// Base and End are callables double(const Vector& x, Vector& grad).
template <class Base, class End>
class GeometricBridge {
 public:
  GeometricBridge(Base base, End end, double beta)
      : base_(std::move(base)), end_(std::move(end)), beta_(beta) {}

  double beta() const { return beta_; }
  void set_beta(double beta) { beta_ = beta; }

  void evaluate(BridgePoint& p) const {
    p.log_base = base_(p.x, p.grad_base);
    p.log_end = end_(p.x, p.grad_end);
  }

  double log_density(const BridgePoint& p) const {
    return annealed(p.log_base, p.log_end);
  }
  template <class Out>
  void gradient(const BridgePoint& p, Out&& out) const {
    out = (1.0 - beta_) * p.grad_base + beta_ * p.grad_end;
  }

  double annealed(double log_base, double log_end) const {
    return annealed_logpdf(beta_, log_base, log_end);
  }

 private:
  Base base_;
  End end_;
  double beta_;
};

template <class Base, class End>
GeometricBridge<Base, End> make_bridge(Base base, End end, double beta) {
  return GeometricBridge<Base, End>(std::move(base), std::move(end), beta);
}

/// Scratch buffers reused across transitions.
struct McmcWorkspace {
  BridgePoint proposal;
  Vector grad, grad_prop, noise, momentum;

  explicit McmcWorkspace(Index d = 0)
      : proposal(d), grad(d), grad_prop(d), noise(d), momentum(d) {}
};

namespace detail {

inline bool finite_point(const BridgePoint& p, double lp) {
  return std::isfinite(lp) && p.grad_base.allFinite() && p.grad_end.allFinite();
}

}  // namespace detail

/// One ULA / MALA / HMC transition targeting `model`. `current` must already
/// be evaluated. Returns whether the move was accepted (ULA always moves
/// unless the proposal is non-finite). Throws std::domain_error when the
/// current gradient is not finite.
template <class Model>
bool mcmc_transition(const Model& model, const KernelParams& kp, BridgePoint& current,
                     RngStream& rng, McmcWorkspace& ws) {
  if (!(kp.step > 0.0)) throw std::invalid_argument("mcmc: step size must be positive");
  const Index d = current.x.size();
  if (ws.grad.size() != d) ws = McmcWorkspace(d);
  model.gradient(current, ws.grad);
  if (!ws.grad.allFinite()) throw std::domain_error("mcmc: non-finite gradient");
  const double lp = model.log_density(current);
  BridgePoint& prop = ws.proposal;
  const double eps = kp.step;

  if (kp.kind == KernelKind::hmc) {
    if (kp.leapfrog < 1) throw std::invalid_argument("mcmc: leapfrog steps must be >= 1");
    for (Index j = 0; j < d; ++j) ws.momentum(j) = rng.normal();
    const double kinetic0 = 0.5 * ws.momentum.squaredNorm();
    prop.x = current.x;
    ws.grad_prop = ws.grad;
    ws.momentum += 0.5 * eps * ws.grad_prop;
    double lp_prop = lp;
    for (int l = 0; l < kp.leapfrog; ++l) {
      prop.x += eps * ws.momentum;
      model.evaluate(prop);
      lp_prop = model.log_density(prop);
      model.gradient(prop, ws.grad_prop);
      if (!detail::finite_point(prop, lp_prop) || !ws.grad_prop.allFinite()) {
        (void)rng.uniform();
        return false;
      }
      ws.momentum += (l + 1 < kp.leapfrog ? 1.0 : 0.5) * eps * ws.grad_prop;
    }
    const double log_accept = lp_prop - lp + kinetic0 - 0.5 * ws.momentum.squaredNorm();
    if (std::log(rng.uniform()) < log_accept) {
      std::swap(current, prop);
      return true;
    }
    return false;
  }

  const double h = 0.5 * eps * eps;
  for (Index j = 0; j < d; ++j) ws.noise(j) = rng.normal();
  prop.x = current.x + h * ws.grad + eps * ws.noise;
  model.evaluate(prop);
  const double lp_prop = model.log_density(prop);
  model.gradient(prop, ws.grad_prop);
  const bool finite = detail::finite_point(prop, lp_prop) && ws.grad_prop.allFinite();

  if (kp.kind == KernelKind::ula) {
    if (!finite) return false;
    std::swap(current, prop);
    return true;
  }
  const double u = rng.uniform();
  if (!finite) return false;
  const double log_fwd = -0.5 * ws.noise.squaredNorm();
  const double log_rev =
      -0.5 * (current.x - prop.x - h * ws.grad_prop).squaredNorm() / (eps * eps);
  if (std::log(u) < lp_prop - lp + log_rev - log_fwd) {
    std::swap(current, prop);
    return true;
  }
  return false;
}

std::string to_string(KernelKind kind);
KernelKind kernel_from_string(const std::string& s);

}  // namespace rdsmc
