#include "albench/rng.hpp"

#include <cmath>

namespace albench {

namespace {

std::uint64_t fnv1a64_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

// Stream derivation: key = sm(sm(seed ^ fnv1a(tag)) ^ iteration), where sm is
// one splitmix64 step. The pcg32 stream for a key uses (key, sm(key)) as
// (initstate, initseq). Documented so other implementations can reproduce the
// exact trajectories.
std::uint64_t Rng::derive_key(std::uint64_t seed, std::string_view tag,
                              std::uint64_t iteration) {
  std::uint64_t k = splitmix64_once(seed ^ fnv1a64_bytes(tag));
  return splitmix64_once(k ^ iteration);
}

Rng Rng::from_key(std::uint64_t key) {
  return Rng(key, Pcg32::seeded(key, splitmix64_once(key)));
}

Rng Rng::stream(std::uint64_t seed, std::string_view tag,
                std::uint64_t iteration) {
  return from_key(derive_key(seed, tag, iteration));
}

Rng Rng::split(std::uint64_t index) const {
  return from_key(splitmix64_once(key_ ^ splitmix64_once(index)));
}

std::uint32_t Rng::bounded(std::uint32_t bound) {
  // Rejection method from the PCG basic C library; unbiased for any bound.
  std::uint32_t threshold = (-bound) % bound;
  for (;;) {
    std::uint32_t r = next_u32();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  for (;;) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

}  // namespace albench
