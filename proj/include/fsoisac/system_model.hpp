#pragma once

#include "fsoisac/channel.hpp"
#include "fsoisac/clipnoise.hpp"
#include "fsoisac/metrics.hpp"
#include "fsoisac/ofdm_config.hpp"

#include <span>

namespace fsoisac {

enum class ClippingModel {
  Bussgang,  // K = Q(lambda_b) and colored clipping noise
  Linear,    // K = 1, no clipping noise; isolates the power cost of the bias
};

/// Everything needed to map a (b, p) pair to SNRs and metrics.
struct SystemModel {
  OfdmConfig cfg;
  ChannelState channel;
  NoiseParams noise;
  ClippingModel clipping = ClippingModel::Bussgang;

  SystemModel() = default;
  SystemModel(OfdmConfig c, ChannelState ch, NoiseParams n);

  /// Requires P - b^2 > 0.
  ClippingStats stats(double b, std::span<const double> p_norm) const;
  SnrProfile snr(const ClippingStats& stats) const;
  SnrProfile snr(double b, std::span<const double> p_norm) const { return snr(stats(b, p_norm)); }
  /// Zero metrics when the bias consumes the whole power budget.
  MetricReport metrics(double b, std::span<const double> p_norm) const;

  double max_bias() const;
};

}  // namespace fsoisac
