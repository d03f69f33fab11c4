#pragma once

#include <cstdint>
#include <initializer_list>

namespace rdsmc {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by a root seed and a path of integers, e.g.
/// {step, particle, purpose}. The k-th draw is a pure function of
/// (root_seed, path, k), so results do not depend on which worker produced
/// them or in what order streams were created.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t root_seed);
  RngStream(std::uint64_t root_seed, std::initializer_list<std::uint64_t> path);

  /// Stream whose path is this stream's path extended by `path`.
  /// Independent of how many draws have been taken from *this.
  [[nodiscard]] RngStream fork(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double normal();

  std::uint64_t draws() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  RngStream(std::uint64_t key_hash, std::uint64_t ctr_hash, int);
  void append(std::uint64_t v);
  void refill();

  std::uint64_t key_hash_;
  std::uint64_t ctr_hash_;
  std::uint64_t counter_ = 0;  // 64-bit draws taken
  std::uint64_t block_[2] = {0, 0};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Purpose tags used as the last path element of a stream.
namespace purpose {
inline constexpr std::uint64_t reference = 1;
inline constexpr std::uint64_t propagate = 2;
inline constexpr std::uint64_t inner = 3;
inline constexpr std::uint64_t resample = 4;
inline constexpr std::uint64_t mcmc = 5;
inline constexpr std::uint64_t metric = 6;
inline constexpr std::uint64_t target = 7;
inline constexpr std::uint64_t split = 8;
}  // namespace purpose

}  // namespace rdsmc
