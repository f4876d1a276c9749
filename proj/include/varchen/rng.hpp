#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace varchen {

/// Counter-based SplitMix64 stream.
///
/// Output i (0-based) of a stream with seed `s` is
///
///     mix(s + (i + 1) * 0x9E3779B97F4A7C15)
///
/// with the standard SplitMix64 finalizer
///
///     mix(z): z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
///             z ^= z >> 27;  z *= 0x94D049BB133111EB;
///             z ^= z >> 31;  return z;
///
/// Every draw is a pure function of (seed, counter), so any language can
/// reproduce the sequence bit-exactly from the seed. Derived quantities are
/// defined on top of the raw 64-bit stream and documented per method; none
/// of them go through std:: distributions, whose output is not portable
/// across standard-library implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  /// Counter form: output `i` of the stream seeded with `seed`.
  static std::uint64_t at(std::uint64_t seed, std::uint64_t i) {
    return mix(seed + (i + 1) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t next_u64() { return at(seed_, counter_++); }

  /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]: ((u >> 11) + 1) * 2^-53. Safe input for log().
  double next_open_double() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n): next_u64() % n. The modulo scheme is part of
  /// the documented contract (the bias is immaterial at the n used here and
  /// trivial to reproduce elsewhere).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller: r = sqrt(-2 ln u1), angle = 2*pi*u2,
  /// returns r*cos(angle). Consumes exactly two draws per value. Bit-exact
  /// given identical libm; the raw u64 stream is bit-exact unconditionally.
  double next_gaussian() {
    const double u1 = next_open_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream: seeded with output `index` of this seed's
  /// stream (does not advance this stream's counter).
  SplitMix64 substream(std::uint64_t index) const { return SplitMix64(at(seed_, index)); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// In-place Fisher-Yates: for i = n-1 .. 1, j = rng.next_below(i + 1), swap(v[i], v[j]).
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace varchen
