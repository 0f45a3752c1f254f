#pragma once

#include "fsoisac/clipnoise.hpp"
#include "fsoisac/ofdm_config.hpp"

#include <span>
#include <vector>

namespace fsoisac {

struct MetricReport {
  double C = 0.0;             // bits/s/Hz
  double I_tau = 0.0;         // delay-domain Fisher information [1/s^2]
  double I = 0.0;             // distance-domain Fisher information [1/m^2]
  double crb_distance = 0.0;  // c / (2 sqrt(I_tau)) [m]; +inf when I_tau == 0
};

/// C = sum_k log2(1 + gamma_c(k) p(k)) / (B T_o).
double spectral_efficiency(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg);

/// dC/dp(k) = gamma_c(k) / ((1 + gamma_c(k) p(k)) B T_o ln 2).
std::vector<double> spectral_efficiency_gradient(const SnrProfile& snr, std::span<const double> p_norm,
                                                 const OfdmConfig& cfg);

/// I_tau = 8 pi^2 M delta_f^2 / N * sum_k k^2 gamma_s(k) p(k).
double fisher_information(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg);

/// sum_k k^2 gamma_s(k) p(k), the quantity the allocator constrains.
double weighted_sensing_sum(std::span<const double> gamma_s, std::span<const double> p_norm);

/// sum_k ln(1 + gamma_c(k) p(k)), the natural-log capacity used inside the allocator.
double log_capacity_sum(std::span<const double> gamma_c, std::span<const double> p_norm);

MetricReport evaluate_metrics(const SnrProfile& snr, std::span<const double> p_norm, const OfdmConfig& cfg);

/// Distance L = c tau / 2, so var(L) = (c/2)^2 var(tau) and I_L = 4 I_tau / c^2.
double distance_information(double I_tau);
double crb_distance(double I_tau);

/// Fisher threshold for a desired distance precision: varsigma0 = c / (2 precision) in 1/s,
/// normalized to N varsigma0^2 / (8 pi^2 M delta_f^2).
double varsigma0_from_precision(double precision_m);
double normalized_sensing_threshold(double precision_m, const OfdmConfig& cfg);

/// C0 * B * T_o, expressed in nats for the allocator's natural-log Lagrangian.
double normalized_capacity_threshold(double C0_bpshz, const OfdmConfig& cfg);

}  // namespace fsoisac
