#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace albench {

// splitmix64 (Vigna's reference implementation, public domain).
// splitmix64_once(0) == 0xE220A8397B1DCDAF, pinned by a unit test.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_once(std::uint64_t x) {
  return splitmix64_next(x);
}

// pcg32: the minimal PCG generator (pcg-random.org). The stream seeded with
// (42, 54) must reproduce the published demo output; see the rng unit test.
struct Pcg32 {
  std::uint64_t state = 0;
  std::uint64_t inc = 1;

  static Pcg32 seeded(std::uint64_t initstate, std::uint64_t initseq) {
    Pcg32 g;
    g.state = 0;
    g.inc = (initseq << 1u) | 1u;
    g.next();
    g.state += initstate;
    g.next();
    return g;
  }

  std::uint32_t next() {
    std::uint64_t old = state;
    state = old * 6364136223846793005ull + inc;
    auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }
};

// Deterministic RNG with named substreams. Every consumer derives its stream
// from (seed, tag, iteration); identical derivations yield identical draws on
// every platform. split(i) returns an independent child stream that does not
// depend on how much of the parent has been consumed.
class Rng {
 public:
  Rng() : Rng(from_key(0)) {}

  static std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                                  std::uint64_t iteration = 0);
  static Rng from_key(std::uint64_t key);
  static Rng stream(std::uint64_t seed, std::string_view tag,
                    std::uint64_t iteration = 0);

  Rng split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }

  std::uint32_t next_u32() { return gen_.next(); }
  std::uint64_t next_u64() {
    std::uint64_t hi = gen_.next();
    return (hi << 32) | gen_.next();
  }

  // Unbiased integer in [0, bound); bound must be > 0.
  std::uint32_t bounded(std::uint32_t bound);

  // 53-bit uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_range(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via Marsaglia's polar method (one value per call).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = bounded(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct elements drawn uniformly from `population`, in draw order.
  template <typename T>
  std::vector<T> sample_without_replacement(std::span<const T> population,
                                            std::size_t k) {
    std::vector<T> pool(population.begin(), population.end());
    if (k > pool.size()) k = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j =
          i + bounded(static_cast<std::uint32_t>(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  Rng(std::uint64_t key, Pcg32 gen) : key_(key), gen_(gen) {}

  std::uint64_t key_;
  Pcg32 gen_;
};

}  // namespace albench
