#pragma once

// Seeded channel generation and per-sample frame simulation.
//
// Channels are abstract complex vectors: Rayleigh (NLOS default) or Rician
// with a configurable K-factor. Frame simulation pushes unit-power M-PSK
// symbols through the cascade with AWGN and reports the frame-averaged
// received power in dBm, mirroring an RSSI readout.
//
// Seeding contract (all draws via SplitMix64, see rng.hpp):
//   generate_channel: streams substream_seed(spec.seed, kChannelHh/Hv/Gh/Gv)
//     drawing next_cn01() per entry, in entry order; Rician LOS phases come
//     from substream kChannelLosPhase, one next_unit() per entry, shared by
//     all four vectors.
//   simulate_frames: symbol indices from substream(noise_seed, kFrameSymbols)
//     via next_below(M); AWGN from substream(noise_seed, kFrameNoise) via
//     next_cn01(); both advance one draw per sample, frames concatenated.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rislab/core.hpp"
#include "rislab/rng.hpp"

namespace rislab {

enum class FadingKind { kRayleigh, kRician };

inline std::string to_string(FadingKind k) {
  return k == FadingKind::kRayleigh ? "rayleigh" : "rician";
}

inline FadingKind fading_kind_from_string(const std::string& s) {
  if (s == "rayleigh") return FadingKind::kRayleigh;
  if (s == "rician") return FadingKind::kRician;
  throw std::invalid_argument("unknown fading kind: " + s);
}

struct ChannelSpec {
  FadingKind kind = FadingKind::kRayleigh;
  double rician_k = 0.0;  // linear K-factor, rician only
  double path_loss_db = 0.0;
  std::uint64_t seed = 0;
};

struct FrameConfig {
  int frames = 50;
  int samples_per_frame = 1000;
  int modulation_order = 4;

  void validate() const {
    if (frames < 1) throw std::invalid_argument("frames must be >= 1");
    if (samples_per_frame < 1) throw std::invalid_argument("samples_per_frame must be >= 1");
    if (modulation_order != 2 && modulation_order != 4 && modulation_order != 8 &&
        modulation_order != 16)
      throw std::invalid_argument("modulation order must be one of {2,4,8,16}");
  }
};

// Upper bound on frames * samples_per_frame for one simulate_frames call.
// The hardware-scale setting of 50 x 1e6 stays selectable.
inline constexpr std::uint64_t kDefaultSampleBudget = 100'000'000ULL;

// Draws one channel realization. Rayleigh entries are i.i.d. CN(0,1)
// scaled to the configured path loss; Rician adds a fixed unit-modulus
// mean component with the usual K/(K+1) power split. Power levels
// (tx/noise/alpha/background) are left at their defaults for the caller
// to fill in.
inline ChannelRealization generate_channel(const ChannelSpec& spec, int n) {
  if (n <= 0) throw std::invalid_argument("element count must be positive: got " + std::to_string(n));
  if (spec.kind == FadingKind::kRician && spec.rician_k < 0.0)
    throw std::invalid_argument("Rician K-factor must be nonnegative");

  const double scale = std::pow(10.0, -spec.path_loss_db / 20.0);
  const double k = spec.rician_k;
  const bool rician = spec.kind == FadingKind::kRician;
  const double los_w = rician ? std::sqrt(k / (k + 1.0)) : 0.0;
  const double diffuse_w = rician ? std::sqrt(1.0 / (k + 1.0)) : 1.0;

  SplitMix64 los_phase(substream_seed(spec.seed, stream_tag::kChannelLosPhase));
  std::vector<cdouble> los(static_cast<std::size_t>(n));
  for (auto& z : los) {
    const double phi = 2.0 * 3.141592653589793238462643383279502884 * los_phase.next_unit();
    z = {std::cos(phi), std::sin(phi)};
  }

  auto draw = [&](std::uint64_t tag) {
    SplitMix64 g(substream_seed(spec.seed, tag));
    std::vector<cdouble> v(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = scale * (los_w * los[i] + diffuse_w * g.next_cn01());
    return v;
  };

  ChannelRealization chan;
  chan.h_h = draw(stream_tag::kChannelHh);
  chan.h_v = draw(stream_tag::kChannelHv);
  chan.g_h = draw(stream_tag::kChannelGh);
  chan.g_v = draw(stream_tag::kChannelGv);
  return chan;
}

// Empirical RSSI in dBm: per-frame mean |r[k]|^2, frame means averaged in
// the linear domain, referenced to the transmit power. Noise variance is
// taken relative to unit symbol power, i.e. 10^((noise_dbm - tx_dbm)/10);
// a -inf noise power disables the AWGN term entirely.
inline double simulate_frames(const ChannelRealization& chan, const Codebook& cb,
                              const FrameConfig& fc, std::uint64_t noise_seed,
                              std::uint64_t sample_budget = kDefaultSampleBudget) {
  fc.validate();
  chan.validate();
  const std::uint64_t total_samples =
      static_cast<std::uint64_t>(fc.frames) * static_cast<std::uint64_t>(fc.samples_per_frame);
  if (total_samples > sample_budget)
    throw std::invalid_argument("frame simulation of " + std::to_string(total_samples) +
                                " samples exceeds the budget of " + std::to_string(sample_budget));

  const cdouble amp = cascade_amplitude(chan, cb);
  const bool noiseless = std::isinf(chan.noise_power_dbm) && chan.noise_power_dbm < 0.0;
  const double noise_var =
      noiseless ? 0.0 : std::pow(10.0, (chan.noise_power_dbm - chan.tx_power_dbm) / 10.0);
  const double noise_amp = std::sqrt(noise_var);

  SplitMix64 symbols(substream_seed(noise_seed, stream_tag::kFrameSymbols));
  SplitMix64 awgn(substream_seed(noise_seed, stream_tag::kFrameNoise));
  const double two_pi = 2.0 * 3.141592653589793238462643383279502884;
  const int m = fc.modulation_order;

  double frame_mean_sum = 0.0;
  for (int f = 0; f < fc.frames; ++f) {
    double acc = 0.0;
    for (int s = 0; s < fc.samples_per_frame; ++s) {
      const double phase = two_pi * static_cast<double>(symbols.next_below(static_cast<std::uint64_t>(m))) /
                           static_cast<double>(m);
      const cdouble x{std::cos(phase), std::sin(phase)};
      cdouble r = amp * x;
      if (!noiseless) r += noise_amp * awgn.next_cn01();
      acc += std::norm(r);
    }
    frame_mean_sum += acc / static_cast<double>(fc.samples_per_frame);
  }
  const double mean_power = frame_mean_sum / static_cast<double>(fc.frames);
  return chan.tx_power_dbm + 10.0 * std::log10(mean_power);
}

}  // namespace rislab
