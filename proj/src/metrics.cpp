#include "fsoisac/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fsoisac {
namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("metrics: SNR and allocation lengths differ");
}

double sensing_prefactor(const OfdmConfig& cfg) {
  return 8.0 * std::numbers::pi * std::numbers::pi * cfg.M * cfg.delta_f * cfg.delta_f / cfg.N;
}

}  // namespace

double log_capacity_sum(std::span<const double> gamma_c, std::span<const double> p_norm) {
  check_sizes(gamma_c.size(), p_norm.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p_norm.size(); ++i) acc += std::log1p(gamma_c[i] * p_norm[i]);
  return acc;
}

double weighted_sensing_sum(std::span<const double> gamma_s, std::span<const double> p_norm) {
  check_sizes(gamma_s.size(), p_norm.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p_norm.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    acc += k * k * gamma_s[i] * p_norm[i];
  }
  return acc;
}

double spectral_efficiency(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg) {
  const double nats = log_capacity_sum(snr.gamma_c, p_norm);
  return nats / std::numbers::ln2 / (cfg.bandwidth() * cfg.T_o());
}

std::vector<double> spectral_efficiency_gradient(const SnrProfile& snr, std::span<const double> p_norm,
                                                 const OfdmConfig& cfg) {
  check_sizes(snr.gamma_c.size(), p_norm.size());
  const double scale = 1.0 / (cfg.bandwidth() * cfg.T_o() * std::numbers::ln2);
  std::vector<double> g(p_norm.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * snr.gamma_c[i] / (1.0 + snr.gamma_c[i] * p_norm[i]);
  return g;
}

double fisher_information(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg) {
  return sensing_prefactor(cfg) * weighted_sensing_sum(snr.gamma_s, p_norm);
}

double distance_information(double I_tau) { return 4.0 * I_tau / (kSpeedOfLight * kSpeedOfLight); }

double crb_distance(double I_tau) {
  if (!(I_tau > 0.0)) return std::numeric_limits<double>::infinity();
  return kSpeedOfLight / (2.0 * std::sqrt(I_tau));
}

MetricReport evaluate_metrics(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg) {
  MetricReport r;
  r.C = spectral_efficiency(snr, p_norm, cfg);
  r.I_tau = fisher_information(snr, p_norm, cfg);
  r.I = distance_information(r.I_tau);
  r.crb_distance = crb_distance(r.I_tau);
  return r;
}

double varsigma0_from_precision(double precision_m) {
  if (!(precision_m > 0.0)) throw std::invalid_argument("precision must be positive");
  return kSpeedOfLight / (2.0 * precision_m);
}

double normalized_sensing_threshold(double precision_m, const OfdmConfig& cfg) {
  const double v = varsigma0_from_precision(precision_m);
  return v * v / sensing_prefactor(cfg);
}

double normalized_capacity_threshold(double C0_bpshz, const OfdmConfig& cfg) {
  if (!(C0_bpshz >= 0.0)) throw std::invalid_argument("C0 must be non-negative");
  return C0_bpshz * cfg.bandwidth() * cfg.T_o() * std::numbers::ln2;
}

}  // namespace fsoisac
