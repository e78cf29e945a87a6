#pragma once

// Seedable, splittable random streams. Every stochastic routine in the
// library draws from an explicit RngStream so that equal seeds give
// bitwise-identical results regardless of thread scheduling: parallel units
// of work (chains, replications) each receive their own substream derived
// from the parent seed, never a shared generator.
//
// Core generator is xoshiro256++ seeded through SplitMix64 (Blackman &
// Vigna). Variate transforms are implemented here rather than with
// std::<distribution> types, whose output is implementation-defined.

#include <cstdint>

namespace bmlr {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (int i = 0; i < 4; ++i) s_[i] = detail::splitmix64(x);
  }

  // Seed of substream `index`, hashed so that distinct (seed, index) pairs
  // give statistically independent streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ 0xA3EC4E93C0A1B2C3ull;
    std::uint64_t h = detail::splitmix64(x);
    x = h ^ (index + 0x9E3779B97F4A7C15ull);
    return detail::splitmix64(x);
  }

  RngStream substream(std::uint64_t index) const {
    return RngStream(derive(seed_, index));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t r = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return r;
  }

  // Uniform on the open interval (0,1); never returns an endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the AS 241 inverse CDF.
  double normal();

  // Exponential with rate 1.
  double exponential();

  // Gamma(shape, 1), shape > 0. Marsaglia-Tsang squeeze for shape >= 1 and
  // the power boost for shape < 1.
  double gamma(double shape);

  // Index in [0, n) with probability proportional to weights[i] >= 0.
  int categorical(const double* weights, int n);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace bmlr
