#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gclab {

// xoshiro256** with splitmix64 seeding. We roll our own stream instead of
// <random> distributions so that results are bit-identical across standard
// library implementations; dataset hashes and resume checks depend on that.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform double in [0, 1)
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n), n >= 1; rejection keeps it exactly uniform
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// FNV-1a, used both for substream derivation and content hashing.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

// Named substream derivation: every random decision in a run flows from one
// root seed through (tag, indices) keys, so independent pieces never share a
// stream and reruns are exact.
inline std::uint64_t substream(std::uint64_t root, std::string_view tag,
                               std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = fnv1a(&root, sizeof root);
  h = fnv1a(tag, h);
  for (std::uint64_t k : keys) h = fnv1a(&k, sizeof k, h);
  return h;
}

inline Rng substream_rng(std::uint64_t root, std::string_view tag,
                         std::initializer_list<std::uint64_t> keys = {}) {
  return Rng(substream(root, tag, keys));
}

}  // namespace gclab
