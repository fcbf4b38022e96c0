#pragma once

#include <cstdint>
#include <initializer_list>

namespace qcr {

// Splittable counter-style PRNG built on the splitmix64 finalizer.
// Every stochastic operation takes an explicit stream; there is no global
// RNG anywhere in the library. Derived streams are independent of the
// draw order on the parent, which keeps parallel rollouts reproducible.
class RngStream {
 public:
  explicit RngStream(uint64_t seed)
      : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)), state_(key_) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli_half() { return (next_u64() >> 63) != 0; }

  // Mirrored-threshold Bernoulli: sample(1-p) on the same stream position
  // yields the exact complement of sample(p). The environment relies on
  // this so that a p=1 bit-flip channel inverts outcomes deterministically.
  bool bernoulli(double p) {
    double u = next_double();
    if (p < 0.5) return u < p;
    return u >= 1.0 - p;
  }

  // Child stream addressed by a list of keys. Derivation only reads the
  // construction-time identity, not the current draw position.
  RngStream derive(std::initializer_list<uint64_t> keys) const {
    uint64_t k = key_;
    for (uint64_t v : keys) k = mix(k ^ mix(v + 0x632be59bd9b4e019ull));
    return RngStream(raw_tag{}, k);
  }

 private:
  struct raw_tag {};
  RngStream(raw_tag, uint64_t k) : key_(k), state_(k) {}

  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t state_;
};

}  // namespace qcr
