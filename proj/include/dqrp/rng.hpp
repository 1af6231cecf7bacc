#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace dqrp {

// Deterministic random draws on top of std::mt19937_64. The engine itself is
// specified bit-exactly by the standard; the mappings below replace the
// implementation-defined std distributions so that encoder and decoder
// regenerate identical operators and dithers from the seeds in the bitstream
// header. Bump kPrngVersion if any mapping changes.
inline constexpr std::uint8_t kPrngVersion = 1;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - unit();  // (0, 1], keeps log finite
    double u2 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Unbiased integer in [0, bound) via rejection sampling.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % bound;
  }

  // Fisher-Yates permutation of {0, .., n-1}.
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    std::iota(p.begin(), p.end(), 0u);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  // m distinct indices drawn from {0, .., n-1}, returned ascending.
  std::vector<std::uint32_t> subset(std::size_t n, std::size_t m);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<std::uint32_t> Rng::subset(std::size_t n, std::size_t m) {
  std::vector<std::uint32_t> p = permutation(n);
  p.resize(m);
  std::sort(p.begin(), p.end());
  return p;
}

// Mixes a base seed with a stream index (band, block, ...) so that derived
// dithers are independent yet reproducible. SplitMix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace dqrp
