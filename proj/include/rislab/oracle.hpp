#pragma once

// Black-box measurement interface consumed by every search algorithm:
// hand it a codebook, get an RSSI value back, with every call counted.
//
// Analytic mode returns tx_power + 10*log10(gain) plus optional Gaussian
// measurement noise applied in the dB domain. Empirical mode runs the
// per-sample frame simulation. Either way the query counter increments by
// exactly one per measure() call.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rislab/channel.hpp"
#include "rislab/core.hpp"
#include "rislab/rng.hpp"

namespace rislab {

enum class OracleMode { kAnalytic, kEmpirical };

struct OracleConfig {
  OracleMode mode = OracleMode::kAnalytic;
  double measurement_noise_db = 0.0;  // std of dB-domain noise, 0 = noiseless
  FrameConfig frame_config;           // empirical mode only
  std::uint64_t noise_seed = 0;

  void validate() const {
    if (measurement_noise_db < 0.0)
      throw std::invalid_argument("measurement noise std must be nonnegative");
    frame_config.validate();
  }
};

struct QueryLog {
  struct Entry {
    std::uint64_t index;  // 1-based
    std::string codebook_digest;
    double rssi_dbm;
  };
  std::uint64_t count = 0;
  std::vector<Entry> trajectory;
};

// Interface the search algorithms drive. The control plane provides a
// second implementation that realizes measure() over the wire.
class RssiOracleBase {
 public:
  virtual ~RssiOracleBase() = default;
  virtual double measure(const Codebook& cb) = 0;
  virtual void reset() = 0;
  virtual std::uint64_t query_count() const = 0;
  virtual QueryLog take_trajectory() const = 0;
};

// In-process oracle bound to one channel realization.
class SimOracle : public RssiOracleBase {
 public:
  SimOracle(ChannelRealization chan, OracleConfig cfg = {})
      : chan_(std::move(chan)),
        cfg_(cfg),
        noise_stream_(substream_seed(cfg.noise_seed, stream_tag::kMeasurementNoise)) {
    chan_.validate();
    cfg_.validate();
  }

  double measure(const Codebook& cb) override {
    check_dims(chan_, cb);
    double rssi;
    if (cfg_.mode == OracleMode::kAnalytic) {
      rssi = cascade_gain(chan_, cb).dbm(chan_.tx_power_dbm);
      if (cfg_.measurement_noise_db > 0.0)
        rssi += cfg_.measurement_noise_db * noise_stream_.next_gaussian();
    } else {
      // Each call gets a fresh but reproducible frame-noise seed; the tag
      // offset keeps call seeds clear of the fixed stream tags.
      const std::uint64_t call_seed = substream_seed(cfg_.noise_seed, 0x1000 + log_.count);
      rssi = simulate_frames(chan_, cb, cfg_.frame_config, call_seed);
    }
    ++log_.count;
    log_.trajectory.push_back({log_.count, digest(cb), rssi});
    return rssi;
  }

  // Zeroes the counter, clears the trajectory, and rewinds the
  // measurement-noise stream so a rerun reproduces the same perturbations.
  void reset() override {
    log_ = {};
    noise_stream_ = SplitMix64(substream_seed(cfg_.noise_seed, stream_tag::kMeasurementNoise));
  }

  std::uint64_t query_count() const override { return log_.count; }
  QueryLog take_trajectory() const override { return log_; }

  const ChannelRealization& channel() const { return chan_; }
  const OracleConfig& config() const { return cfg_; }

 private:
  ChannelRealization chan_;
  OracleConfig cfg_;
  SplitMix64 noise_stream_;
  QueryLog log_;
};

}  // namespace rislab
