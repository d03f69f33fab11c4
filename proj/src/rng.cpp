#include "rdsmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace rdsmc {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

void philox4x32_10(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo32(m0, ctr[0], hi0, lo0);
    mulhilo32(m1, ctr[2], hi1, lo1);
    const std::uint32_t c0 = hi1 ^ ctr[1] ^ k0;
    const std::uint32_t c2 = hi0 ^ ctr[3] ^ k1;
    ctr[0] = c0;
    ctr[1] = lo1;
    ctr[2] = c2;
    ctr[3] = lo0;
    k0 += w0;
    k1 += w1;
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t root_seed)
    : key_hash_(splitmix64(root_seed ^ 0x5851F42D4C957F2DULL)),
      ctr_hash_(splitmix64(root_seed + 0x14057B7EF767814FULL)) {}

RngStream::RngStream(std::uint64_t root_seed,
                     std::initializer_list<std::uint64_t> path)
    : RngStream(root_seed) {
  for (auto v : path) append(v);
}

RngStream::RngStream(std::uint64_t key_hash, std::uint64_t ctr_hash, int)
    : key_hash_(key_hash), ctr_hash_(ctr_hash) {}

void RngStream::append(std::uint64_t v) {
  key_hash_ = splitmix64(key_hash_ ^ splitmix64(v + 0x2545F4914F6CDD1DULL));
  ctr_hash_ = splitmix64(ctr_hash_ + splitmix64(v ^ 0xD6E8FEB86659FD93ULL));
}

RngStream RngStream::fork(std::initializer_list<std::uint64_t> path) const {
  RngStream child(key_hash_, ctr_hash_, 0);
  for (auto v : path) child.append(v);
  return child;
}

void RngStream::refill() {
  const std::uint64_t block = counter_ >> 1;
  std::uint32_t ctr[4] = {
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
      static_cast<std::uint32_t>(ctr_hash_),
      static_cast<std::uint32_t>(ctr_hash_ >> 32)};
  philox4x32_10(ctr, static_cast<std::uint32_t>(key_hash_),
                static_cast<std::uint32_t>(key_hash_ >> 32));
  block_[0] = (static_cast<std::uint64_t>(ctr[0]) << 32) | ctr[1];
  block_[1] = (static_cast<std::uint64_t>(ctr[2]) << 32) | ctr[3];
}

std::uint64_t RngStream::next_u64() {
  if ((counter_ & 1) == 0) refill();
  return block_[counter_++ & 1];
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(phi);
  has_cached_normal_ = true;
  return r * std::cos(phi);
}

}  // namespace rdsmc
