#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace scancalib {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Small deterministic generator (splitmix64 core). Identical sequences on
// every platform, so noise realizations are reproducible bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Counter-style stream tree: substream(i) derives an independent child key,
// so per-trajectory / per-step / per-ray noise can be generated in any order
// (or in parallel) without changing the realization.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(detail::mix64(key)) {}

  RngStream substream(std::uint64_t index) const {
    RngStream child(0);
    child.key_ = detail::mix64(key_ ^ detail::mix64(index + 0x632BE59BD9B4E019ull));
    return child;
  }

  Rng rng() const { return Rng(key_); }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// Deterministic per-repetition seed derivation.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return RngStream(base).substream(index).key();
}

}  // namespace scancalib
