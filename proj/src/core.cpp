#include "rdsmc/core.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace rdsmc {

std::vector<Index> systematic_resample(const Eigen::Ref<const Vector>& weights,
                                       double u, Index n_out) {
  if (weights.size() == 0) throw std::invalid_argument("systematic_resample: no weights");
  if (!(u >= 0.0 && u < 1.0))
    throw std::invalid_argument("systematic_resample: u must lie in [0, 1)");
  std::vector<Index> out(static_cast<std::size_t>(n_out));
  const Index n = weights.size();
  // Grid points are scaled by the running total so rounding in the
  // cumulative sum never selects a trailing zero-weight index.
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += weights(i);
  if (!(total > 0.0)) throw DegenerateError("systematic_resample: all weights are zero");
  double cdf = weights(0);
  Index j = 0;
  for (Index k = 0; k < n_out; ++k) {
    const double point =
        total * (u + static_cast<double>(k)) / static_cast<double>(n_out);
    while (point >= cdf && j < n - 1) cdf += weights(++j);
    out[static_cast<std::size_t>(k)] = j;
  }
  return out;
}

std::vector<Index> multinomial_resample(const Eigen::Ref<const Vector>& weights,
                                        RngStream& rng, Index n_out) {
  const Index n = weights.size();
  if (n == 0) throw std::invalid_argument("multinomial_resample: no weights");
  std::vector<double> cdf(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    acc += weights(i);
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) throw DegenerateError("multinomial_resample: all weights are zero");
  std::vector<Index> out(static_cast<std::size_t>(n_out));
  for (auto& idx : out) {
    const double point = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), point);
    idx = std::min<Index>(static_cast<Index>(it - cdf.begin()), n - 1);
  }
  return out;
}

ParticleSystem::ParticleSystem(Index n, Index d)
    : positions(ParticleMatrix::Zero(n, d)), log_weights(Vector::Zero(n)) {
  if (n < 1 || d < 1) throw std::invalid_argument("ParticleSystem: need N >= 1 and d >= 1");
}

bool ParticleSystem::degenerate() const {
  if (log_weights.hasNaN()) return true;
  return !std::isfinite(log_sum_exp(log_weights));
}

void ParticleSystem::resample(const std::vector<Index>& ancestors) {
  positions = gather_rows(positions, ancestors);
  if (scores) scores = gather_rows(*scores, ancestors);
  if (log_marginals) {
    Vector lm(static_cast<Index>(ancestors.size()));
    for (std::size_t i = 0; i < ancestors.size(); ++i)
      lm(static_cast<Index>(i)) = (*log_marginals)(ancestors[i]);
    log_marginals = std::move(lm);
  }
  log_weights = Vector::Zero(static_cast<Index>(ancestors.size()));
}

void parallel_for(Index n, int workers,
                  const std::function<void(Index, int)>& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<Index>(n, 1))));
  if (workers == 1) {
    for (Index i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = w; i < n; i += workers) fn(i, w);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int default_workers() {
  if (const char* env = std::getenv("RDSMC_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

}  // namespace rdsmc
