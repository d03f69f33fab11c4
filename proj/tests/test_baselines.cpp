#include <doctest.h>

#include <cmath>

#include "rdsmc/baselines.hpp"

using namespace rdsmc;

TEST_CASE("step size adaptation rule") {
  CHECK(adapt_step_size(1.0, 1.0, 0.75) == doctest::Approx(1.01258).epsilon(1e-5));
  CHECK(adapt_step_size(1.0, 0.0, 0.75) == doctest::Approx(0.96319).epsilon(1e-5));
  CHECK(adapt_step_size(0.2, 0.75, 0.75) == 0.2);
  CHECK(adapt_step_size(1e-8, 0.0, 0.75) == 1e-8);
  CHECK_THROWS_AS(adapt_step_size(0.0, 0.5, 0.75), std::invalid_argument);
}

TEST_CASE("annealing from the initial distribution to itself") {
  AnnealConfig c;
  c.steps = 50;
  c.n_particles = 32;
  c.mcmc_steps = 2;
  c.radius = 1.5;
  c.tau = 0.5;
  const GaussianTarget rho0(Vector::Zero(2), c.reference_variance());
  const RunResult smc = run_smc_baseline(rho0, c, 3);
  CHECK(*smc.log_z == 0.0);
  CHECK(smc.resample_events == 0);

  const GaussianTarget scaled(Vector::Zero(2), c.reference_variance(), std::log(3.0));
  CHECK(std::abs(*run_ais_baseline(scaled, c, 3).log_z - std::log(3.0)) <= 1e-12);
  CHECK(std::abs(*run_smc_baseline(scaled, c, 3).log_z - std::log(3.0)) <= 1e-12);
}

TEST_CASE("SMC without resampling is AIS") {
  AnnealConfig c;
  c.steps = 40;
  c.n_particles = 32;
  c.mcmc_steps = 3;
  c.kappa = 0.0;
  const GmmTarget target(Eigen::Vector2d(-2, 0), Eigen::Vector2d(2, 1));
  const RunResult a = run_ais_baseline(target, c, 7);
  const RunResult s = run_smc_baseline(target, c, 7);
  CHECK((a.positions.array() == s.positions.array()).all());
  CHECK((a.weights.array() == s.weights.array()).all());
  CHECK(*a.log_z == *s.log_z);

  c.kappa = 1.0;
  c.workers = 1;
  const RunResult r1 = run_smc_baseline(target, c, 7);
  c.workers = 3;
  const RunResult r3 = run_smc_baseline(target, c, 7);
  CHECK(r1.resample_events == c.steps - 1);
  CHECK((r1.positions.array() == r3.positions.array()).all());
  CHECK(*r1.log_z == *r3.log_z);
}

TEST_CASE("shifted Gaussian normalizer") {
  AnnealConfig c;
  c.n_particles = 128;
  const GaussianTarget target(Vector::Constant(1, 5.0), 1.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CHECK(std::abs(*run_ais_baseline(target, c, seed).log_z) <= 0.05);
    CHECK(std::abs(*run_smc_baseline(target, c, seed).log_z) <= 0.05);
  }
}

TEST_CASE("baseline normalizer is unbiased") {
  AnnealConfig c;
  c.steps = 20;
  c.n_particles = 8;
  c.mcmc_steps = 2;
  const GaussianTarget target(Vector::Constant(1, 1.0), 0.5, std::log(3.0));
  for (bool smc : {false, true}) {
    const int reps = 300;
    double s = 0.0, s2 = 0.0;
    for (int k = 0; k < reps; ++k) {
      const RunResult r = smc ? run_smc_baseline(target, c, 500 + k) : run_ais_baseline(target, c, 500 + k);
      const double z = std::exp(*r.log_z);
      s += z;
      s2 += z * z;
    }
    const double mean = s / reps;
    CHECK(std::abs(mean - 3.0) <= 4.0 * std::sqrt((s2 / reps - mean * mean) / (reps - 1)));
  }
}

TEST_CASE("step size adaptation settles near the target rate") {
  AnnealConfig c;
  c.steps = 400;
  c.n_particles = 64;
  c.mcmc_steps = 4;
  c.step_init = 3.0;
  const GaussianTarget target(Vector::Zero(1), 1.0);
  const RunResult r = run_ais_baseline(target, c, 2);
  double acc = 0.0;
  int n = 0;
  for (std::size_t k = r.trace.size() * 3 / 4; k < r.trace.size(); ++k, ++n)
    acc += r.trace[k].mean_acceptance;
  acc /= n;
  CHECK(acc >= 0.6);
  CHECK(acc <= 0.9);
  CHECK(r.trace.size() == 400u);
}

TEST_CASE("default initial scales") {
  const GmmTarget gmm(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4));
  const BaselineScale g = default_baseline_scale(gmm);
  CHECK(g.radius == doctest::Approx(4.5));
  CHECK(g.tau == doctest::Approx(std::sqrt(2.0 * std::log(2.0))));
  CHECK(default_baseline_scale(RingsTarget{}).radius == 4.0);
  CHECK(default_baseline_scale(FunnelTarget{}).radius == doctest::Approx(2.12));

  AnnealConfig bad;
  bad.kappa = 1.5;
  CHECK_THROWS_AS(validate_anneal_config(bad), std::invalid_argument);
  bad = AnnealConfig{};
  bad.radius = 0.0;
  CHECK_THROWS_AS(validate_anneal_config(bad), std::invalid_argument);
}
