#pragma once

// Deterministic random number generation. Every stochastic routine in the
// library derives its stream from a caller-supplied 64-bit seed through
// substream(), so results are reproducible across runs and independent of
// thread scheduling. No global RNG state exists anywhere.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace forensics {

// splitmix64 finalizer, used for seeding and for hashing-style mixing.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over a string, for deriving named substreams (test names, center ids).
constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Substream keys: a master seed plus a name (and optional index) map to an
// independent stream. Adding a new named consumer never disturbs existing ones.
inline uint64_t substream(uint64_t master, std::string_view name) {
  return mix64(master ^ fnv1a64(name));
}

inline uint64_t substream(uint64_t master, std::string_view name, uint64_t index) {
  return mix64(mix64(master ^ fnv1a64(name)) + index);
}

// xoshiro256** by Blackman and Vigna. Small, fast, and fully specified here,
// so streams are identical on every platform and compiler.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0,n), unbiased (Lemire rejection).
  uint64_t bounded(uint64_t n) {
    if (n == 0) throw std::invalid_argument("bounded: n must be positive");
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Inclusive integer range.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    return lo + static_cast<int64_t>(bounded(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller. Stateless (one value per call).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = next_double();
      return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0, v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  // Exact Bernoulli-sum binomial. Counts here are at most a few thousand,
  // so the O(n) loop is fine and avoids approximation entirely.
  int64_t binomial(int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    int64_t k = 0;
    for (int64_t i = 0; i < n; ++i) {
      if (next_double() < p) ++k;
    }
    return k;
  }

  // Draws without replacement: number of successes in `draws` picks from a
  // population of `total` containing `successes`. Sequential urn scheme.
  int64_t hypergeometric(int64_t total, int64_t successes, int64_t draws) {
    if (total < 0 || successes < 0 || successes > total || draws < 0 || draws > total)
      throw std::invalid_argument("hypergeometric: inconsistent parameters");
    int64_t hits = 0;
    int64_t remaining = total;
    int64_t good = successes;
    for (int64_t i = 0; i < draws; ++i) {
      if (bounded(static_cast<uint64_t>(remaining)) < static_cast<uint64_t>(good)) {
        ++hits;
        --good;
      }
      --remaining;
    }
    return hits;
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace forensics
