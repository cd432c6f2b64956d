#pragma once

// Deterministic random number generation for all simulation components.
//
// Every random quantity in the library is drawn from a SplitMix64 stream.
// Substreams are derived by hashing (seed, tag) pairs, so independent
// consumers (channel taps, symbol draws, AWGN, measurement noise) never
// share state. No std::*_distribution is used anywhere: the uniform ->
// gaussian mappings below are fixed algorithms, so a seed reproduces the
// identical realization on every run.

#include <cmath>
#include <complex>
#include <cstdint>

namespace rislab {

// SplitMix64 (Steele/Lea/Flood). Counter-based: one 64-bit state advanced
// by a fixed odd increment, output whitened by two xor-multiply rounds.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_unit_open() { return 1.0 - next_unit(); }

  // Uniform integer in [0, n). n must divide 2^64 evenly for an unbiased
  // modulo; callers here only use small powers of two.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (cosine branch). Two uniforms per draw;
  // no cached spare, so the k-th call consumes exactly uniforms 2k-1, 2k.
  double next_gaussian() {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Circularly-symmetric complex normal with E|z|^2 = 1, drawn in polar
  // form: |z| = sqrt(-ln u1) (Rayleigh), arg z = 2*pi*u2.
  std::complex<double> next_cn01() {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double mag = std::sqrt(-std::log(u1));
    return {mag * std::cos(2.0 * kPi * u2), mag * std::sin(2.0 * kPi * u2)};
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::uint64_t state_;
};

// Derives an independent substream seed from (seed, tag). One whitening
// round over the xor of the seed and a tag-dependent odd multiple keeps
// substreams with adjacent tags uncorrelated.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag) {
  SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL * (tag + 1)));
  return g.next_u64();
}

// Fixed substream tags used across the library.
namespace stream_tag {
inline constexpr std::uint64_t kChannelHh = 0x01;
inline constexpr std::uint64_t kChannelHv = 0x02;
inline constexpr std::uint64_t kChannelGh = 0x03;
inline constexpr std::uint64_t kChannelGv = 0x04;
inline constexpr std::uint64_t kChannelLosPhase = 0x05;
inline constexpr std::uint64_t kFrameSymbols = 0x10;
inline constexpr std::uint64_t kFrameNoise = 0x11;
inline constexpr std::uint64_t kMeasurementNoise = 0x20;
inline constexpr std::uint64_t kRandomSearch = 0x30;
}  // namespace stream_tag

}  // namespace rislab
