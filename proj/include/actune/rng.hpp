#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace actune {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash64(std::string_view s, uint64_t seed = 0xcbf29ce484222325ULL) {
  uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // final avalanche
  uint64_t st = h;
  return splitmix64(st);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  uint64_t st = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(st);
}

// Maps a 64-bit hash to (0,1); both endpoints excluded so log/Box-Muller
// transforms stay finite.
inline double unit_from_hash(uint64_t h) {
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u <= 0.0) u = 0x1.0p-53;
  if (u >= 1.0) u = 1.0 - 0x1.0p-53;
  return u;
}

// Deterministic standard normal from a hash; pure function of its input.
inline double normal_from_hash(uint64_t h) {
  uint64_t st = h;
  double u1 = unit_from_hash(splitmix64(st));
  double u2 = unit_from_hash(splitmix64(st));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Seeded random stream used everywhere randomness is needed. Distributions
// are hand-derived from raw 64-bit draws so a given seed reproduces the
// same values on every standard library.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : gen_(seed) {}

  uint64_t draw64() { return gen_(); }

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Uniform on [lo, hi] inclusive, rejection-sampled to avoid modulo bias.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(gen_());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  size_t index(size_t n) { return static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n) - 1)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace actune
