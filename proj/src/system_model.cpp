#include "fsoisac/system_model.hpp"

#include <cmath>
#include <utility>

namespace fsoisac {

SystemModel::SystemModel(OfdmConfig c, ChannelState ch, NoiseParams n)
    : cfg(c), channel(std::move(ch)), noise(n) {
  cfg.validate();
}

double SystemModel::max_bias() const { return std::sqrt(cfg.P); }

ClippingStats SystemModel::stats(double b, std::span<const double> p_norm) const {
  if (clipping == ClippingModel::Bussgang) return clipping_stats(cfg, p_norm, b);
  ClippingStats s;
  s.bias = b;
  s.sigma_x2 = (cfg.P - b * b) / cfg.N;
  s.lambda_b = -b / std::sqrt(s.sigma_x2);
  s.K = 1.0;
  s.R_x = signal_autocorrelation(cfg, p_norm, b);
  s.R_wp.assign(static_cast<std::size_t>(cfg.N), 0.0);
  s.P_wp.assign(static_cast<std::size_t>(cfg.N), 0.0);
  return s;
}

SnrProfile SystemModel::snr(const ClippingStats& s) const { return snr_profiles(s, channel, cfg, noise); }

MetricReport SystemModel::metrics(double b, std::span<const double> p_norm) const {
  if (!(cfg.P - b * b > 0.0)) {
    MetricReport zero;
    zero.crb_distance = crb_distance(0.0);
    return zero;
  }
  return evaluate_metrics(snr(b, p_norm), p_norm, cfg);
}

}  // namespace fsoisac
