#include <doctest.h>

#include <cmath>

#include "rdsmc/rdsmc.hpp"

using namespace rdsmc;

namespace {

class NowhereTarget final : public Target {
 public:
  Index dim() const override { return 2; }
  std::string name() const override { return "nowhere"; }
  double log_density(const ConstVectorRef&) const override { return kNegInf; }
  double log_density_grad(const ConstVectorRef&, VectorRef g) const override {
    g.setZero();
    return kNegInf;
  }
};

InnerConfig approx_inner(double variance) {
  InnerConfig c;
  c.n_is = 8;
  c.proposal = InnerProposal::gaussian_approx;
  c.approx_variance = variance;
  return c;
}

bool same(const RunResult& a, const RunResult& b) {
  return (a.positions.array() == b.positions.array()).all() &&
         (a.weights.array() == b.weights.array()).all() && a.log_z == b.log_z &&
         a.resample_events == b.resample_events;
}

}  // namespace

TEST_CASE("weight formulas") {
  CHECK(intermediate_log_weight(-1.0, -0.5, -1.2, -0.6) == doctest::Approx(0.3));
  CHECK(intermediate_log_weight(-0.7, -0.7, -0.7, -0.7) == 0.0);
  CHECK(initial_log_weight(-2.0, -3.5) == doctest::Approx(1.5));

  CHECK((no_resample_adjustment(Vector::Constant(5, -3.0)).cwiseAbs().maxCoeff()) <= 1e-15);
  const Vector adj = no_resample_adjustment(Eigen::Vector2d(0.0, std::log(3.0)));
  CHECK(adj(0) == doctest::Approx(std::log(0.5)));
  CHECK(adj(1) == doctest::Approx(std::log(1.5)));

  CHECK_FALSE(should_resample(10, 5, 0.3, 0.1));
  CHECK(should_resample(5, 5, 0.3, 0.2));
  CHECK_FALSE(should_resample(5, 5, 0.3, 0.5));
  CHECK(should_resample(3, 5, 1.0, 1.0));
  CHECK_FALSE(should_resample(3, 5, 0.0, 0.0));
}

TEST_CASE("outer configuration checks") {
  OuterConfig o;
  o.kappa = 1.5;
  CHECK_THROWS_AS(validate_outer_config(o, 10), std::invalid_argument);
  o.kappa = 0.3;
  o.t_start = 11;
  CHECK_THROWS_AS(validate_outer_config(o, 10), std::invalid_argument);
  o.t_start = 10;
  CHECK_NOTHROW(validate_outer_config(o, 10));
  o.n_particles = 0;
  CHECK_THROWS_AS(validate_outer_config(o, 10), std::invalid_argument);
}

TEST_CASE("initial weight is one when the target is the reference") {
  const DiffusionSchedule s(ScheduleParams{}, 100);
  const GaussianTarget ref(Vector::Zero(2), 1.0);
  const InnerConfig exact = approx_inner(1.0);
  RngStream rng(3);
  Vector x(2);
  for (int k = 0; k < 20; ++k) {
    reference_sample(s, rng, x);
    const InnerEstimate e = inner_estimate(ref, s.alpha(100), s.sigma(100), x, exact, RngStream(k));
    CHECK(std::abs(initial_log_weight(e.log_marginal, reference_logpdf(s, x))) <= 1e-10);
  }
}

TEST_CASE("log-weights telescope along each trajectory") {
  const DiffusionSchedule s(ScheduleParams{}, 20);
  const GmmTarget target(Eigen::Vector2d(-2, 1), Eigen::Vector2d(1.5, -1));
  OuterConfig o;
  o.n_particles = 32;
  o.kappa = 0.5;
  InnerConfig inner;
  inner.n_is = 16;
  const RunResult r = run_rdsmc(target, s, o, inner, 9);
  REQUIRE_FALSE(r.degenerate);
  const TrajectoryTerms& t = r.terms;
  const Vector rhs = t.log_target + t.sum_log_forward - t.log_reference - t.sum_log_proposal;
  CHECK((t.sum_log_increments - rhs).cwiseAbs().maxCoeff() <= 1e-10);

  o.n_particles = 1;
  const RunResult one = run_rdsmc(target, s, o, inner, 9);
  const TrajectoryTerms& u = one.terms;
  CHECK(std::abs(*one.log_z - (u.log_target(0) + u.sum_log_forward(0) - u.log_reference(0) -
                               u.sum_log_proposal(0))) <= 1e-10);
  CHECK(one.resample_events == 0);
}

TEST_CASE("variants and determinism") {
  const DiffusionSchedule s(ScheduleParams{}, 15);
  const RingsTarget target;
  OuterConfig o;
  o.n_particles = 24;
  o.kappa = 0.0;
  InnerConfig inner;
  inner.n_is = 8;
  const RunResult full0 = run_rdsmc(target, s, o, inner, 4);
  o.variant = Variant::is_only;
  o.kappa = 0.7;
  const RunResult is_only = run_rdsmc(target, s, o, inner, 4);
  CHECK(same(full0, is_only));
  CHECK(full0.resample_events == 0);

  o.variant = Variant::full;
  o.kappa = 1.0;
  o.t_start = 10;
  const RunResult a = run_rdsmc(target, s, o, inner, 5);
  CHECK(a.resample_events == 11);
  o.workers = 3;
  const RunResult b = run_rdsmc(target, s, o, inner, 5);
  CHECK(same(a, b));
  CHECK(a.trace.size() == 16u);

  o.variant = Variant::proposal_only;
  const RunResult p = run_rdsmc(target, s, o, inner, 5);
  CHECK_FALSE(p.log_z.has_value());
  CHECK((p.weights.array() == 1.0 / 24).all());
  CHECK(p.resample_events == 0);
}

TEST_CASE("reference target gives Z near one") {
  // Single runs scatter by about 0.08 in log Z at N = 256: the forward kernel
  // uses g_t and the proposal g_{t+1}, which differ threefold at t = 0.
  const DiffusionSchedule s(ScheduleParams{}, 100);
  const GaussianTarget ref(Vector::Zero(2), 1.0);
  OuterConfig o;
  o.n_particles = 256;
  const int reps = 10;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < reps; ++k) {
    const double z = std::exp(*run_rdsmc(ref, s, o, approx_inner(1.0), 1 + k).log_z);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean - 1.0) <= 4.0 * se);
  CHECK(std::abs(std::log(mean)) <= 0.1);
}

TEST_CASE("normalizing constant estimate is unbiased") {
  const DiffusionSchedule s(ScheduleParams{}, 10);
  const GaussianTarget target(Vector::Zero(2), 1.0, std::log(3.0));
  OuterConfig o;
  o.n_particles = 16;
  o.kappa = 0.5;
  const InnerConfig inner = approx_inner(2.0);
  const int reps = 300;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < reps; ++k) {
    const double z = std::exp(*run_rdsmc(target, s, o, inner, 1000 + k).log_z);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean - 3.0) <= 4.0 * se);
}

TEST_CASE("degenerate runs are flagged") {
  const DiffusionSchedule s(ScheduleParams{}, 5);
  const NowhereTarget target;
  OuterConfig o;
  o.n_particles = 8;
  const RunResult r = run_rdsmc(target, s, o, InnerConfig{}, 1);
  CHECK(r.degenerate);
  CHECK(*r.log_z == kNegInf);
  CHECK_FALSE(r.failure.empty());
  CHECK(r.trace.size() == 1u);
  CHECK(r.trace[0].dead_particles == 8);
}
