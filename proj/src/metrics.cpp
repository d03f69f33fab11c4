#include "rdsmc/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rdsmc {

namespace {

Vector normalized(const Vector& w) {
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w(i) >= 0.0)) throw std::invalid_argument("metrics: weights must be nonnegative");
    total += w(i);
  }
  if (!(total > 0.0)) throw std::invalid_argument("metrics: zero total weight");
  return w / total;
}

}  // namespace

double gmm_weight_ratio_bias(const ParticleMatrix& samples, const Vector& weights,
                             const GmmTarget& gmm) {
  if (samples.cols() != gmm.dim())
    throw std::invalid_argument("gmm_weight_ratio_bias: dimension mismatch");
  const Vector w = normalized(weights);
  double first = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) {
    const Vector x = samples.row(i).transpose();
    if (gmm.component_log_density(0, x) > gmm.component_log_density(1, x)) first += w(i);
  }
  return std::abs(first - gmm.weight(0));
}

Vector weighted_histogram(const Vector& values, const Vector& weights, int bins, double lo,
                          double hi) {
  if (bins < 1) throw std::invalid_argument("histogram: bins must be >= 1");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  if (values.size() != weights.size())
    throw std::invalid_argument("histogram: values and weights differ in length");
  const Vector w = normalized(weights);
  Vector h = Vector::Zero(bins);
  const double width = (hi - lo) / bins;
  for (Index i = 0; i < values.size(); ++i) {
    const double b = std::floor((values(i) - lo) / width);
    const int k = static_cast<int>(std::clamp(b, 0.0, static_cast<double>(bins - 1)));
    h(k) += w(i);
  }
  return h;
}

double histogram_tvd(const Vector& values_a, const Vector& weights_a, const Vector& values_b,
                     const Vector& weights_b, int bins, double lo, double hi) {
  const Vector ha = weighted_histogram(values_a, weights_a, bins, lo, hi);
  const Vector hb = weighted_histogram(values_b, weights_b, bins, lo, hi);
  return 0.5 * (ha - hb).cwiseAbs().sum();
}

double weighted_ks(const Vector& a, const Vector& wa, const Vector& b, const Vector& wb) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("ks: empty sample");
  const Vector pa = normalized(wa), pb = normalized(wb);
  std::vector<Index> ia(static_cast<std::size_t>(a.size())), ib(static_cast<std::size_t>(b.size()));
  std::iota(ia.begin(), ia.end(), Index{0});
  std::iota(ib.begin(), ib.end(), Index{0});
  std::sort(ia.begin(), ia.end(), [&](Index x, Index y) { return a(x) < a(y); });
  std::sort(ib.begin(), ib.end(), [&](Index x, Index y) { return b(x) < b(y); });
  double fa = 0.0, fb = 0.0, sup = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ia.size() || j < ib.size()) {
    double v;
    if (j == ib.size() || (i < ia.size() && a(ia[i]) <= b(ib[j])))
      v = a(ia[i]);
    else
      v = b(ib[j]);
    while (i < ia.size() && a(ia[i]) == v) fa += pa(ia[i++]);
    while (j < ib.size() && b(ib[j]) == v) fb += pb(ib[j++]);
    sup = std::max(sup, std::abs(fa - fb));
  }
  return std::min(sup, 1.0);
}

double sliced_ksd(const ParticleMatrix& samples, const Vector& weights,
                  const ParticleMatrix& reference, const Vector& reference_weights,
                  int n_projections, RngStream& rng) {
  if (n_projections < 1) throw std::invalid_argument("sliced_ksd: n_projections must be >= 1");
  if (samples.cols() != reference.cols())
    throw std::invalid_argument("sliced_ksd: dimension mismatch");
  const Index d = samples.cols();
  double acc = 0.0;
  Vector dir(d);
  for (int p = 0; p < n_projections; ++p) {
    do {
      for (Index j = 0; j < d; ++j) dir(j) = rng.normal();
    } while (dir.norm() == 0.0);
    dir.normalize();
    acc += weighted_ks(samples * dir, weights, reference * dir, reference_weights);
  }
  return acc / n_projections;
}

double predictive_log_likelihood(const ParticleMatrix& samples, const Vector& weights,
                                 const Dataset& test) {
  const Index p = test.features.cols();
  if (samples.cols() != p + 1)
    throw std::invalid_argument("predictive_log_likelihood: dimension mismatch");
  const Vector w = normalized(weights);
  const LogRegTarget prior(Eigen::MatrixXd(0, p), Vector(0));
  double acc = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) {
    if (w(i) == 0.0) continue;
    const Vector theta = samples.row(i).transpose();
    acc += w(i) * (prior.log_prior(theta) +
                   LogRegTarget::log_likelihood(test.features, test.labels, theta));
  }
  return acc;
}

Vector radii(const ParticleMatrix& samples) { return samples.rowwise().norm(); }

Vector angles(const ParticleMatrix& samples) {
  if (samples.cols() != 2) throw std::invalid_argument("angles: samples must be 2-D");
  Vector out(samples.rows());
  for (Index i = 0; i < samples.rows(); ++i) out(i) = std::atan2(samples(i, 1), samples(i, 0));
  return out;
}

}  // namespace rdsmc
