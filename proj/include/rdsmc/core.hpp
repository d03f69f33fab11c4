#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdsmc/rng.hpp"

namespace rdsmc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// N x d particle positions, one particle per contiguous row.
using ParticleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Raised when every weight of a particle system (or inner estimator) is
/// zero, i.e. every log-weight is -inf.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log(sum(exp(v))) with max-subtraction. Summation is sequential so the
/// result does not depend on how the caller partitioned the work.
template <class Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  if (values.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const Scalar m = values.maxCoeff();
  if (std::isinf(m)) return m;  // all -inf, or a +inf term
  if (std::isnan(m)) return m;
  Scalar acc = 0;
  for (Index i = 0; i < values.size(); ++i) acc += std::exp(values(i) - m);
  return m + std::log(acc);
}

/// log of the arithmetic mean of exp(values).
template <class Derived>
typename Derived::Scalar log_mean_exp(const Eigen::DenseBase<Derived>& values) {
  return log_sum_exp(values) -
         std::log(static_cast<typename Derived::Scalar>(values.size()));
}

/// Self-normalized weights from log-weights. Throws DegenerateError when all
/// log-weights are -inf.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalize_log_weights(
    const Eigen::DenseBase<Derived>& log_weights) {
  const auto lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse))
    throw DegenerateError("normalize_log_weights: no finite total weight");
  return (log_weights.derived().array() - lse).exp().matrix();
}

/// Effective sample size (sum w)^2 / sum w^2.
template <class Derived>
typename Derived::Scalar ess(const Eigen::DenseBase<Derived>& weights) {
  using Scalar = typename Derived::Scalar;
  Scalar s = 0, s2 = 0;
  for (Index i = 0; i < weights.size(); ++i) {
    s += weights(i);
    s2 += weights(i) * weights(i);
  }
  if (!(s2 > 0)) throw DegenerateError("ess: all weights are zero");
  return s * s / s2;
}

template <class Derived>
typename Derived::Scalar ess_from_log_weights(
    const Eigen::DenseBase<Derived>& log_weights) {
  return ess(normalize_log_weights(log_weights));
}

/// Systematic resampling with a single uniform `u` in [0, 1). Returns
/// nondecreasing ancestor indices.
std::vector<Index> systematic_resample(const Eigen::Ref<const Vector>& weights,
                                       double u, Index n_out);

/// Multinomial (i.i.d. categorical) resampling.
std::vector<Index> multinomial_resample(const Eigen::Ref<const Vector>& weights,
                                        RngStream& rng, Index n_out);

/// N weighted particles with optional per-particle caches.
struct ParticleSystem {
  ParticleMatrix positions;
  Vector log_weights;
  std::optional<ParticleMatrix> scores;
  std::optional<Vector> log_marginals;
  int step = 0;

  ParticleSystem(Index n, Index d);

  Index size() const { return positions.rows(); }
  Index dim() const { return positions.cols(); }

  /// True when no particle carries positive weight or a log-weight is NaN.
  bool degenerate() const;
  Vector normalized_weights() const { return normalize_log_weights(log_weights); }
  double effective_sample_size() const { return ess(normalized_weights()); }

  /// Replace every row (positions and caches) by its ancestor's row and reset
  /// log-weights to zero.
  void resample(const std::vector<Index>& ancestors);
};

/// Copy rows of `m` by ancestor index.
template <class Matrix>
Matrix gather_rows(const Matrix& m, const std::vector<Index>& ancestors) {
  Matrix out(static_cast<Index>(ancestors.size()), m.cols());
  for (std::size_t i = 0; i < ancestors.size(); ++i)
    out.row(static_cast<Index>(i)) = m.row(ancestors[i]);
  return out;
}

/// Runs fn(i, worker) for i in [0, n) on `workers` threads. Each index is
/// visited exactly once; callers write only to slot i, so results do not
/// depend on the worker count.
void parallel_for(Index n, int workers,
                  const std::function<void(Index, int)>& fn);

/// Worker count from the RDSMC_WORKERS environment variable, else 1.
int default_workers();

}  // namespace rdsmc
