#include <doctest.h>

#include <cmath>

#include "rdsmc/metrics.hpp"

using namespace rdsmc;

TEST_CASE("histogram distances") {
  const Eigen::Vector2d v(0.25, 0.75);
  CHECK(histogram_tvd(v, Eigen::Vector2d(0.5, 0.5), v, Eigen::Vector2d(0.7, 0.3), 2, 0, 1) ==
        doctest::Approx(0.2));
  CHECK(histogram_tvd(v, Eigen::Vector2d(1, 1), v, Eigen::Vector2d(3, 3), 10, 0, 1) == 0.0);
  CHECK(histogram_tvd(Vector::Constant(1, 0.1), Vector::Ones(1), Vector::Constant(1, 0.9),
                      Vector::Ones(1), 4, 0, 1) == doctest::Approx(1.0));

  const Vector h = weighted_histogram(Eigen::Vector3d(-5.0, 0.3, 20.0), Eigen::Vector3d(1, 2, 1), 4, 0, 2);
  CHECK(h(0) == doctest::Approx(0.25 + 0.5));
  CHECK(h(3) == doctest::Approx(0.25));
  CHECK(h.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(weighted_histogram(v, Eigen::Vector2d(0, 0), 2, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(weighted_histogram(v, Eigen::Vector2d(1, 1), 2, 1, 1), std::invalid_argument);
}

TEST_CASE("Kolmogorov-Smirnov distances") {
  CHECK(weighted_ks(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1), Vector::Constant(1, 0.5),
                    Vector::Ones(1)) == doctest::Approx(0.5));
  CHECK(weighted_ks(Eigen::Vector2d(0, 1), Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d(0, 1),
                    Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(0.4));
  CHECK(weighted_ks(Eigen::Vector3d(1, 2, 3), Vector::Ones(3), Eigen::Vector3d(3, 1, 2),
                    Vector::Ones(3)) == 0.0);

  RngStream rng(1);
  ParticleMatrix a(50, 3), b(40, 3);
  for (Index i = 0; i < 50; ++i)
    for (Index j = 0; j < 3; ++j) a(i, j) = rng.normal();
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 3; ++j) b(i, j) = 2.0 + rng.normal();
  RngStream r1(2), r2(2);
  CHECK(sliced_ksd(a, Vector::Ones(50), a, Vector::Ones(50), 16, r1) == 0.0);
  const double d = sliced_ksd(a, Vector::Ones(50), b, Vector::Ones(40), 16, r2);
  CHECK(d > 0.0);
  CHECK(d <= 1.0);
  RngStream r3(2);
  CHECK(sliced_ksd(a, Vector::Ones(50), b, Vector::Ones(40), 16, r3) == d);
}

TEST_CASE("GMM weight ratio bias") {
  const GmmTarget gmm(Eigen::Vector2d(-5, 0), Eigen::Vector2d(5, 0));
  ParticleMatrix s(10, 2);
  for (Index i = 0; i < 10; ++i) s.row(i) << (i == 0 ? -5.0 : 5.0), 0.0;
  CHECK(gmm_weight_ratio_bias(s, Vector::Ones(10), gmm) == doctest::Approx(0.0).epsilon(1e-15));
  Vector w = Vector::Ones(10);
  w(0) = 0.0;
  CHECK(gmm_weight_ratio_bias(s, w, gmm) == doctest::Approx(0.1));
  w(0) = 9.0;
  CHECK(gmm_weight_ratio_bias(s, w, gmm) == doctest::Approx(0.4));
}

TEST_CASE("predictive log-likelihood") {
  Dataset test;
  test.features = Eigen::MatrixXd::Ones(3, 2);
  test.labels = Eigen::Vector3d(1, 0, 1);
  const ParticleMatrix zero = ParticleMatrix::Zero(1, 3);
  const double log_prior = -1.5 * std::log(2 * M_PI) - std::log(2.5);
  CHECK(predictive_log_likelihood(zero, Vector::Ones(1), test) ==
        doctest::Approx(log_prior + 3 * std::log(0.5)).epsilon(1e-12));

  // w = (1, 0), b = 0: logits are 1 on every row.
  ParticleMatrix two(2, 3);
  two.row(0) << 0, 0, 0;
  two.row(1) << 1, 0, 0;
  const double l1 = -1.5 * std::log(2 * M_PI) - std::log(2.5) - 0.5 +
                    2 * -std::log1p(std::exp(-1.0)) - std::log1p(std::exp(1.0));
  const double expect = 0.25 * (log_prior + 3 * std::log(0.5)) + 0.75 * l1;
  CHECK(predictive_log_likelihood(two, Eigen::Vector2d(1, 3), test) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(predictive_log_likelihood(ParticleMatrix::Zero(1, 2), Vector::Ones(1), test),
                  std::invalid_argument);
}

TEST_CASE("polar coordinates and bias") {
  ParticleMatrix s(2, 2);
  s << 0, 1, -3, -4;
  const Vector r = radii(s), a = angles(s);
  CHECK(r(0) == doctest::Approx(1.0));
  CHECK(r(1) == doctest::Approx(5.0));
  CHECK(a(0) == doctest::Approx(M_PI / 2));
  CHECK(a(1) == doctest::Approx(std::atan2(-4.0, -3.0)));
  CHECK(logz_bias(-0.3, 0.2) == doctest::Approx(0.5));
}
