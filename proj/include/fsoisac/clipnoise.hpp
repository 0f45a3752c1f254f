#pragma once

#include "fsoisac/channel.hpp"
#include "fsoisac/ofdm_config.hpp"

#include <span>
#include <vector>

namespace fsoisac {

/// Standard normal density and upper-tail probability.
double normal_pdf(double x);
double normal_q(double x);

/// Second-order statistics of the clipping noise for a given bias and allocation.
struct ClippingStats {
  double bias = 0.0;
  double sigma_x2 = 0.0;
  double lambda_b = 0.0;  // -b / sigma_x
  double K = 0.5;
  double mean_wp = 0.0;
  double power_wp = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  std::vector<double> R_x;   // lags 0 .. N-1
  std::vector<double> R_wp;  // lags 0 .. N-1
  std::vector<double> P_wp;  // bins 0 .. N-1
};

struct SnrProfile {
  std::vector<double> gamma_c;  // k = 1 .. N/2-1
  std::vector<double> gamma_s;
};

/// Q(lambda_b) = Q(-b / sigma_x).
double bussgang_gain(double b, double sigma_x);

struct ClipMoments {
  double mean = 0.0;
  double power = 0.0;
};

/// E(w_p) and E(w_p^2) for w_p(n) = {x(n) + b}+ - b - K x(n).
///
/// With beta = b / sigma_x:
///   E(w_p)   = sigma_x (phi(beta) - beta Q(beta))
///   E(w_p^2) = sigma_x^2 (beta^2 Q(beta) - beta phi(beta) + Q(beta)(1 - Q(beta)))
/// Both are evaluated as tail integrals once beta is large enough for the closed forms
/// to cancel catastrophically.
ClipMoments clip_moments(double b, double sigma_x);

/// The double integral of the bivariate Gaussian density at (-b, -b) over the
/// correlation, I(r) = int_{-s^2}^{r} int_{-s^2}^{u} f(t) dt du.
///
/// Swapping the order of integration collapses it to
///   I(r) = 1/(2 pi) int_{-pi/2}^{asin(r/s^2)} (r - s^2 sin th) exp(-beta^2 / (1 + sin th)) dth.
double price_integral(double r, double b, double sigma_x);

/// price_integral for many correlation values at once; shares quadrature work across
/// the sorted abscissae so a full autocorrelation costs one sweep of [-pi/2, pi/2].
std::vector<double> price_integral(std::span<const double> r, double b, double sigma_x);

/// R_x(n) = (P - b^2)/N sum_k 2 p(k) cos(2 pi k n / N), n = 0 .. N-1.
std::vector<double> signal_autocorrelation(const OfdmConfig& cfg, std::span<const double> p_norm, double b);

/// R_wp(n) = I(R_x(n)) + C1 R_x(n) + C2. Fills K, moments, C1, C2 and R_wp of the result.
ClippingStats autocorrelation(double b, double sigma_x, std::span<const double> R_x);

/// P_wp(k) = sum_n R_wp(n) exp(-j 2 pi n k / N), real part.
std::vector<double> clipping_psd(std::span<const double> R_wp);

/// Full statistics at (b, p). Requires P - b^2 > 0.
ClippingStats clipping_stats(const OfdmConfig& cfg, std::span<const double> p_norm, double b);

/// How the mean channel gain enters the noise term.
enum class GainMoment {
  SquareOfMean,  // E(h)^2
  MeanOfSquare,  // E(h^2) = E(h)^2 exp(sigma_t2) under unit-mean log-normal turbulence
};

struct NoiseParams {
  double N_c = 1e-10;  // W/Hz
  double N_s = 1e-10;
  double reflectivity = 0.5;
  GainMoment gain_moment = GainMoment::SquareOfMean;
};

/// gamma(k) = |H(k)|^2 K^2 (P - b^2) / (N0 delta_f / (2 g) + |H(k)|^2 P_wp(k)),
/// g = E(h_c)^2 for communication and R^2 E(h_s)^2 for sensing.
SnrProfile snr_profiles(const ClippingStats& stats, const ChannelState& chan, const OfdmConfig& cfg,
                        const NoiseParams& noise);

}  // namespace fsoisac
