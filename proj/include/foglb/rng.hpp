#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace foglb {

// All randomness flows through named streams derived from one run seed, so
// two runs that should share a trace (e.g. arrivals across experiment arms)
// draw from bit-identical sequences. Distribution transforms are hand-rolled
// because std::<distribution> output is not pinned by the standard.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform over {0, ..., n-1}.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-53 for the n used here (candidate lists, buffers).
    return engine_() % n;
  }

  // Exponential with the given mean; strictly positive.
  double exponential(double mean) {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return -mean * std::log(u);
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Derives an independent stream from (seed, tag, a, b), e.g.
// derive_rng(seed, "arrivals", ap_id, category_index).
inline Rng derive_rng(std::uint64_t seed, std::string_view tag,
                      std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = detail::splitmix64(seed ^ detail::fnv1a(tag));
  h = detail::splitmix64(h ^ (0x9e3779b97f4a7c15ULL * (a + 1)));
  h = detail::splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL * (b + 1)));
  return Rng(h);
}

}  // namespace foglb
