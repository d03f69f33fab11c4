#include <doctest.h>

#include <cmath>
#include <memory>

#include "rdsmc/diffusion.hpp"
#include "rdsmc/inner_mc.hpp"

using namespace rdsmc;

namespace {

// alpha^2 + sigma^2 = 1 at a moderate noise level.
constexpr double kAlpha = 0.8;
constexpr double kSigma = 0.6;

// log(Z p_t(x)) for c N(m, s2 I): c N(x | alpha m, (alpha^2 s2 + sigma^2) I).
double gaussian_log_marginal(const Vector& x, const Vector& m, double s2, double log_c,
                             double alpha, double sigma) {
  return log_c + isotropic_normal_logpdf(x, alpha * m, alpha * alpha * s2 + sigma * sigma);
}

class NowhereTarget final : public Target {
 public:
  Index dim() const override { return 1; }
  std::string name() const override { return "nowhere"; }
  double log_density(const ConstVectorRef&) const override { return kNegInf; }
  double log_density_grad(const ConstVectorRef&, VectorRef g) const override {
    g.setZero();
    return kNegInf;
  }
};

struct MeanSe {
  double mean, se;
};

template <class F>
MeanSe replicate_mean(int reps, F draw) {
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double v = draw(r);
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps;
  return {mean, std::sqrt((s2 / reps - mean * mean) / (reps - 1))};
}

}  // namespace

TEST_CASE("inner proposals") {
  InnerConfig cfg;
  GaussianProposal q = inner_proposal(cfg, Vector::Constant(1, 1.3), 1.0, 0.5);
  CHECK(q.mean(0) == doctest::Approx(1.3));
  CHECK(q.variance == doctest::Approx(0.25));
  q = inner_proposal(cfg, Vector::Constant(1, 1.0), 0.5, 0.8);
  CHECK(q.mean(0) == doctest::Approx(2.0));
  CHECK(q.variance == doctest::Approx(2.56));
  cfg.proposal = InnerProposal::centered;
  q = inner_proposal(cfg, Vector::Constant(1, 1.0), 0.5, 0.8);
  CHECK(q.mean(0) == doctest::Approx(1.0));
  CHECK(q.variance == doctest::Approx(2.56));
  CHECK_THROWS_AS(inner_proposal(cfg, Vector::Zero(1), 0.0, 1.0), std::domain_error);

  const GaussianTarget t(Vector::Zero(1), 1.0);
  CHECK_THROWS_AS(is_estimate(t, 1.0, 0.0, Vector::Zero(1), InnerConfig{}, RngStream(1)),
                  std::invalid_argument);
}

TEST_CASE("exact proposal gives zero-variance estimates") {
  const Eigen::Vector2d m(0.7, -1.2);
  const double s2 = 1.7, log_c = std::log(3.0);
  const GaussianTarget target(m, s2, log_c);
  const Eigen::Vector2d x(0.4, 0.9);
  InnerConfig cfg;
  cfg.proposal = InnerProposal::gaussian_approx;
  cfg.approx_mean = m;
  cfg.approx_variance = s2;
  const double truth = gaussian_log_marginal(x, m, s2, log_c, kAlpha, kSigma);
  for (int n_is : {1, 7}) {
    cfg.n_is = n_is;
    const InnerEstimate e = is_estimate(target, kAlpha, kSigma, x, cfg, RngStream(3));
    CHECK(std::abs(e.log_marginal - truth) <= 1e-10);
    CHECK(e.ess == doctest::Approx(n_is));
    CHECK(std::isnan(e.acceptance));
  }
  cfg.estimator = InnerEstimator::ais;
  cfg.n_is = 16;
  cfg.n_steps = 5;
  cfg.kernel.step = 0.3;
  CHECK(std::abs(ais_estimate(target, kAlpha, kSigma, x, cfg, RngStream(4)).log_marginal -
                 truth) <= 1e-8);
  cfg.estimator = InnerEstimator::ais_resample;
  CHECK(std::abs(ais_estimate(target, kAlpha, kSigma, x, cfg, RngStream(4)).log_marginal -
                 truth) <= 1e-8);
}

TEST_CASE("AIS with one level is importance sampling") {
  const GmmTarget target(Eigen::Vector2d(-1, 0), Eigen::Vector2d(2, 1));
  const Eigen::Vector2d x(0.3, -0.2);
  InnerConfig cfg;
  cfg.n_is = 50;
  cfg.identity = ScoreIdentity::msi;
  const InnerEstimate a = is_estimate(target, kAlpha, kSigma, x, cfg, RngStream(8, {1}));
  cfg.estimator = InnerEstimator::ais;
  const InnerEstimate b = ais_estimate(target, kAlpha, kSigma, x, cfg, RngStream(8, {1}));
  CHECK(a.log_marginal == b.log_marginal);
  CHECK((a.score.array() == b.score.array()).all());
  CHECK(a.ess == b.ess);
}

TEST_CASE("score identities") {
  SUBCASE("single-particle forms") {
    WeightedPosterior post;
    post.u = ParticleMatrix::Constant(1, 2, 0.5);
    post.grad_log_target = ParticleMatrix::Constant(1, 2, -0.5);
    post.weights = Vector::Ones(1);
    const Eigen::Vector2d x(1.0, -1.0);
    const Vector dsi = combine_identity(ScoreIdentity::dsi, post, x, kAlpha, kSigma);
    CHECK((dsi - (kAlpha * Vector::Constant(2, 0.5) - x) / (kSigma * kSigma)).norm() <= 1e-14);
    const Vector tsi = combine_identity(ScoreIdentity::tsi, post, x, kAlpha, kSigma);
    CHECK((tsi - Vector::Constant(2, -0.5 / kAlpha)).norm() <= 1e-14);

    // With sigma = 0 and u = x, MSI reduces to the target gradient.
    WeightedPosterior at_x;
    at_x.u = ParticleMatrix(1, 2);
    at_x.u.row(0) = x.transpose();
    at_x.grad_log_target = ParticleMatrix(1, 2);
    at_x.grad_log_target.row(0) << 0.25, 4.0;
    at_x.weights = Vector::Ones(1);
    const Vector msi = combine_identity(ScoreIdentity::msi, at_x, x, 1.0, 0.0);
    CHECK((msi - Eigen::Vector2d(0.25, 4.0)).norm() <= 1e-14);
    WeightedPosterior no_grad = post;
    no_grad.grad_log_target.resize(0, 2);
    CHECK_THROWS_AS(combine_identity(ScoreIdentity::tsi, no_grad, x, kAlpha, kSigma),
                    std::invalid_argument);
  }

  SUBCASE("MSI is a convex combination of TSI and DSI") {
    RngStream rng(17);
    for (int rep = 0; rep < 20; ++rep) {
      const double alpha = 0.1 + 0.9 * rng.uniform(), sigma = 0.05 + rng.uniform();
      WeightedPosterior post;
      post.u = ParticleMatrix(9, 3);
      post.grad_log_target = ParticleMatrix(9, 3);
      for (Index i = 0; i < 9; ++i)
        for (Index j = 0; j < 3; ++j) {
          post.u(i, j) = rng.normal();
          post.grad_log_target(i, j) = rng.normal();
        }
      Vector lw(9);
      for (Index i = 0; i < 9; ++i) lw(i) = rng.normal();
      post.weights = normalize_log_weights(lw);
      const Eigen::Vector3d x(rng.normal(), rng.normal(), rng.normal());
      const double lambda = alpha * alpha / (alpha * alpha + sigma * sigma);
      const Vector combo = lambda * combine_identity(ScoreIdentity::tsi, post, x, alpha, sigma) +
                           (1 - lambda) * combine_identity(ScoreIdentity::dsi, post, x, alpha, sigma);
      CHECK((combine_identity(ScoreIdentity::msi, post, x, alpha, sigma) - combo)
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("accuracy on a standard normal") {
    const GaussianTarget target(Vector::Zero(2), 1.0);
    const Eigen::Vector2d x(0.9, -0.4);
    const Vector truth = -x;  // alpha^2 + sigma^2 = 1
    InnerConfig cfg;
    cfg.n_is = 10000;
    cfg.proposal = InnerProposal::gaussian_approx;
    for (ScoreIdentity id : {ScoreIdentity::dsi, ScoreIdentity::tsi, ScoreIdentity::msi}) {
      cfg.identity = id;
      const InnerEstimate e = is_estimate(target, kAlpha, kSigma, x, cfg, RngStream(6));
      CHECK((e.score - truth).cwiseAbs().maxCoeff() <= 0.05);
    }
    cfg.proposal = InnerProposal::reversed_kernel;
    cfg.identity = ScoreIdentity::dsi;
    const InnerEstimate e = is_estimate(target, kAlpha, kSigma, x, cfg, RngStream(7));
    CHECK((e.score - truth).cwiseAbs().maxCoeff() <= 0.05);
  }
}

TEST_CASE("DSI error decays like n^-1/2") {
  const GaussianTarget target(Vector::Zero(1), 1.0);
  const Vector x = Vector::Constant(1, 0.9);
  const double truth = -0.9;
  InnerConfig cfg;
  std::vector<double> lx, ly;
  for (int n : {100, 1000, 10000}) {
    cfg.n_is = n;
    double se = 0.0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
      const double s = is_estimate(target, kAlpha, kSigma, x, cfg, RngStream(40, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r)})).score(0);
      se += (s - truth) * (s - truth);
    }
    lx.push_back(std::log(n));
    ly.push_back(0.5 * std::log(se / reps));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int k = 0; k < 3; ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = sxy / sxx;
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
}

TEST_CASE("marginal estimates are unbiased") {
  const Vector x = Vector::Constant(1, 0.7);
  const GaussianTarget gauss(Vector::Zero(1), 1.0, std::log(3.0));
  const GmmTarget gmm(Vector::Constant(1, -1.0), Vector::Constant(1, 2.0), 0.5);
  const double truth_gauss =
      std::exp(gaussian_log_marginal(x, Vector::Zero(1), 1.0, std::log(3.0), kAlpha, kSigma));
  const double truth_gmm =
      0.1 * std::exp(gaussian_log_marginal(x, Vector::Constant(1, -1.0), 0.5, 0.0, kAlpha, kSigma)) +
      0.9 * std::exp(gaussian_log_marginal(x, Vector::Constant(1, 2.0), 0.5, 0.0, kAlpha, kSigma));

  struct Case {
    const Target* target;
    double truth;
    InnerEstimator est;
    InnerProposal prop;
  };
  const std::vector<Case> cases{
      {&gauss, truth_gauss, InnerEstimator::is, InnerProposal::reversed_kernel},
      {&gauss, truth_gauss, InnerEstimator::ais, InnerProposal::reversed_kernel},
      {&gauss, truth_gauss, InnerEstimator::ais_resample, InnerProposal::reversed_kernel},
      {&gauss, truth_gauss, InnerEstimator::is, InnerProposal::centered},
      {&gauss, truth_gauss, InnerEstimator::ais, InnerProposal::centered},
      {&gmm, truth_gmm, InnerEstimator::is, InnerProposal::reversed_kernel},
      {&gmm, truth_gmm, InnerEstimator::ais, InnerProposal::reversed_kernel},
      {&gmm, truth_gmm, InnerEstimator::ais_resample, InnerProposal::centered},
  };
  std::uint64_t k = 0;
  for (const Case& c : cases) {
    InnerConfig cfg;
    cfg.n_is = 4;
    cfg.estimator = c.est;
    cfg.proposal = c.prop;
    if (c.est != InnerEstimator::is) {
      cfg.n_steps = 3;
      cfg.kernel.step = 0.5;
    }
    ++k;
    const MeanSe r = replicate_mean(500, [&](int rep) {
      return std::exp(inner_estimate(*c.target, kAlpha, kSigma, x, cfg,
                                     RngStream(77, {k, static_cast<std::uint64_t>(rep)}))
                          .log_marginal);
    });
    CHECK(std::abs(r.mean - c.truth) <= 4.0 * r.se);
  }
}

TEST_CASE("inner estimator edge cases") {
  const GaussianTarget target(Vector::Zero(2), 1.0);
  const Eigen::Vector2d x(50.0, 0.0);
  InnerConfig cfg;
  cfg.score_clip = 1.0;
  const InnerEstimate e = inner_estimate(target, kAlpha, kSigma, x, cfg, RngStream(1));
  CHECK(e.score.norm() == doctest::Approx(1.0));
  cfg.score_clip.reset();
  cfg.log_marginal_clamp = std::make_pair(-5.0, 5.0);
  CHECK(inner_estimate(target, kAlpha, kSigma, x, cfg, RngStream(1)).log_marginal == -5.0);

  CHECK((clip_score(Eigen::Vector2d(3, 4), 10.0) - Eigen::Vector2d(3, 4)).norm() == 0.0);
  CHECK((clip_score(Eigen::Vector2d(3, 4), 1.0) - Eigen::Vector2d(0.6, 0.8)).norm() <= 1e-15);

  const NowhereTarget nowhere;
  CHECK_THROWS_AS(is_estimate(nowhere, kAlpha, kSigma, Vector::Zero(1), InnerConfig{}, RngStream(2)),
                  DegenerateError);

  auto g = std::make_shared<GaussianTarget>(Vector::Zero(2), 1.0);
  const GradientFreeTarget nograd(g);
  InnerConfig tsi;
  tsi.identity = ScoreIdentity::tsi;
  CHECK_THROWS_AS(validate_inner_config(tsi, nograd), std::invalid_argument);
  InnerConfig ais;
  ais.estimator = InnerEstimator::ais;
  ais.n_steps = 4;
  CHECK_THROWS_AS(validate_inner_config(ais, nograd), std::invalid_argument);
  ais.kernel.step = 0.0;
  CHECK_THROWS_AS(validate_inner_config(ais, target), std::invalid_argument);
  InnerConfig bad_is;
  bad_is.n_steps = 3;
  CHECK_THROWS_AS(validate_inner_config(bad_is, target), std::invalid_argument);
  CHECK_NOTHROW(validate_inner_config(InnerConfig{}, nograd));
}

TEST_CASE("MCMC kernels") {
  auto flat = [](const Vector& u, Vector& grad) {
    grad = Vector::Zero(u.size());
    return 0.0;
  };
  auto normal = [](const Vector& u, Vector& grad) {
    grad = -u;
    return -0.5 * u.squaredNorm();
  };
  auto bridge = make_bridge(flat, normal, 1.0);
  McmcWorkspace ws(1);

  SUBCASE("MALA with a small step accepts almost everything") {
    BridgePoint p(1);
    bridge.evaluate(p);
    RngStream rng(5);
    KernelParams kp{KernelKind::mala, 0.01, 5};
    int acc = 0;
    for (int k = 0; k < 10000; ++k) acc += mcmc_transition(bridge, kp, p, rng, ws) ? 1 : 0;
    CHECK(acc / 10000.0 >= 0.99);
  }

  SUBCASE("HMC chain mean") {
    BridgePoint p(1);
    bridge.evaluate(p);
    RngStream rng(6);
    KernelParams kp{KernelKind::hmc, M_PI / 10, 5};
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      mcmc_transition(bridge, kp, p, rng, ws);
      s += p.x(0);
      s2 += p.x(0) * p.x(0);
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / n));
    CHECK(std::abs(var - 1.0) <= 0.03);
  }

  SUBCASE("ULA on a flat density is a Gaussian random walk") {
    auto walk = make_bridge(flat, flat, 0.5);
    BridgePoint p(2);
    p.x << 1.0, -1.0;
    walk.evaluate(p);
    RngStream rng(7), copy(7);
    McmcWorkspace w2(2);
    CHECK(mcmc_transition(walk, KernelParams{KernelKind::ula, 0.3, 5}, p, rng, w2));
    const double n0 = copy.normal(), n1 = copy.normal();
    CHECK(p.x(0) == doctest::Approx(1.0 + 0.3 * n0).epsilon(1e-15));
    CHECK(p.x(1) == doctest::Approx(-1.0 + 0.3 * n1).epsilon(1e-15));
  }

  SUBCASE("invalid inputs") {
    auto bad = [](const Vector& u, Vector& grad) {
      grad = Vector::Constant(u.size(), NAN);
      return 0.0;
    };
    auto broken = make_bridge(flat, bad, 1.0);
    BridgePoint p(1);
    broken.evaluate(p);
    RngStream rng(8);
    CHECK_THROWS_AS(mcmc_transition(broken, KernelParams{}, p, rng, ws), std::domain_error);
    BridgePoint q(1);
    bridge.evaluate(q);
    CHECK_THROWS_AS(mcmc_transition(bridge, KernelParams{KernelKind::mala, 0.0, 5}, q, rng, ws),
                    std::invalid_argument);
  }

  CHECK(annealed_logpdf(0.0, -1.0, -3.0) == -1.0);
  CHECK(annealed_logpdf(1.0, -1.0, -3.0) == -3.0);
  CHECK(annealed_logpdf(0.25, -1.0, -3.0) == doctest::Approx(-1.5));
}
