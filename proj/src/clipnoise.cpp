#include "fsoisac/clipnoise.hpp"

#include "fsoisac/fft.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fsoisac {
namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kQuadTol = 1e-13;
constexpr unsigned kQuadDepth = 12;
constexpr int kAdaptDepth = 30;
// Absolute error budget of the kernel integrals over the full [-pi/2, pi/2] range.
constexpr double kKernelAbsTol = 1e-14;

// Beyond this the closed-form moments lose more than a couple of digits.
constexpr double kTailSwitch = 2.0;

// int_beta^inf (u - beta)^order phi(u) du
double normal_tail_moment(double beta, int order) {
  const double scale = normal_pdf(beta);
  if (scale == 0.0) return 0.0;
  auto f = [beta, order](double t) { return std::pow(t, order) * std::exp(-beta * t - 0.5 * t * t); };
  return scale * gauss_kronrod<double, 31>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), kQuadDepth,
                                                      kQuadTol);
}

// exp(-beta^2 / (1 + sin th)) with 1 + sin th = 2 sin^2(th/2 + pi/4).
double price_kernel(double theta, double beta2) {
  if (beta2 == 0.0) return 1.0;
  const double s = std::sin(0.5 * theta + 0.25 * std::numbers::pi);
  const double denom = 2.0 * s * s;
  if (denom <= 0.0) return 0.0;
  return std::exp(-beta2 / denom);
}

// Adaptive Gauss-Kronrod with an absolute tolerance split across halves, so stretches where
// the kernel underflows are accepted at once instead of refined to relative precision.
template <typename F>
double integrate_abs(const F& f, double a, double b, double abs_tol, int depth = kAdaptDepth) {
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
  // Boost reports the error of the integral mapped onto [-1, 1].
  err *= 0.5 * (b - a);
  if (err <= abs_tol || err <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(v) || depth == 0) return v;
  const double m = 0.5 * (a + b);
  return integrate_abs(f, a, m, 0.5 * abs_tol, depth - 1) + integrate_abs(f, m, b, 0.5 * abs_tol, depth - 1);
}

double correlation_angle(double r, double sigma2) {
  const double rho = std::clamp(r / sigma2, -1.0, 1.0);
  return std::asin(rho);
}

void check_sigma(double sigma_x) {
  if (!(sigma_x > 0.0) || !std::isfinite(sigma_x)) {
    throw std::invalid_argument("degenerate signal: sigma_x must be positive and finite");
  }
}

void check_lag(double r, double sigma2) {
  if (!(std::abs(r) <= sigma2 * (1.0 + 1e-9))) {
    throw std::domain_error("correlation value outside [-sigma_x^2, sigma_x^2]");
  }
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double bussgang_gain(double b, double sigma_x) {
  check_sigma(sigma_x);
  if (b < 0.0) throw std::invalid_argument("bussgang_gain: b must be non-negative");
  return normal_q(-b / sigma_x);
}

ClipMoments clip_moments(double b, double sigma_x) {
  check_sigma(sigma_x);
  if (b < 0.0) throw std::invalid_argument("clip_moments: b must be non-negative");
  const double beta = b / sigma_x;
  const double q = normal_q(beta);
  ClipMoments m;
  if (beta <= kTailSwitch) {
    const double phi = normal_pdf(beta);
    m.mean = sigma_x * (phi - beta * q);
    m.power = sigma_x * sigma_x * (beta * beta * q - beta * phi + q * (1.0 - q));
  } else {
    m.mean = sigma_x * normal_tail_moment(beta, 1);
    m.power = sigma_x * sigma_x * (normal_tail_moment(beta, 2) - q * q);
  }
  return m;
}

double price_integral(double r, double b, double sigma_x) {
  check_sigma(sigma_x);
  const double sigma2 = sigma_x * sigma_x;
  check_lag(r, sigma2);
  const double beta2 = (b * b) / sigma2;
  const double upper = correlation_angle(r, sigma2);
  const double lower = -0.5 * std::numbers::pi;
  if (upper <= lower) return 0.0;
  auto f = [&](double th) { return (r - sigma2 * std::sin(th)) * price_kernel(th, beta2); };
  const double val = integrate_abs(f, lower, upper, kKernelAbsTol * sigma2);
  return val / (2.0 * std::numbers::pi);
}

std::vector<double> price_integral(std::span<const double> r, double b, double sigma_x) {
  check_sigma(sigma_x);
  const double sigma2 = sigma_x * sigma_x;
  const double beta2 = (b * b) / sigma2;
  for (double v : r) check_lag(v, sigma2);

  std::vector<std::size_t> order(r.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return r[a] < r[c]; });

  // F1(th) = int e, F2(th) = int sin * e, accumulated left to right; I(r) = r F1 - s^2 F2.
  std::vector<double> out(r.size());
  double theta = -0.5 * std::numbers::pi;
  double f1 = 0.0;
  double f2 = 0.0;
  auto e = [beta2](double th) { return price_kernel(th, beta2); };
  auto se = [beta2](double th) { return std::sin(th) * price_kernel(th, beta2); };
  for (std::size_t idx : order) {
    const double next = correlation_angle(r[idx], sigma2);
    if (next > theta) {
      const double share = kKernelAbsTol * (next - theta) / std::numbers::pi;
      f1 += integrate_abs(e, theta, next, share);
      f2 += integrate_abs(se, theta, next, share);
      theta = next;
    }
    out[idx] = (r[idx] * f1 - sigma2 * f2) / (2.0 * std::numbers::pi);
  }
  return out;
}

std::vector<double> signal_autocorrelation(const OfdmConfig& cfg, std::span<const double> p_norm, double b) {
  if (p_norm.size() != cfg.data_subcarriers()) throw std::invalid_argument("signal_autocorrelation: size mismatch");
  const double budget = cfg.P - b * b;
  std::vector<fft::cplx> spectrum(static_cast<std::size_t>(cfg.N), {0.0, 0.0});
  for (int k = 1; k < cfg.N / 2; ++k) {
    spectrum[k] = budget * p_norm[k - 1];
    spectrum[cfg.N - k] = spectrum[k];
  }
  auto rx = fft::inverse_real(spectrum);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.N));
  for (auto& v : rx) v *= scale;
  // Pin the zero lag to its exact value; the FFT leaves a few ulps of drift.
  rx[0] = budget / cfg.N;
  return rx;
}

ClippingStats autocorrelation(double b, double sigma_x, std::span<const double> R_x) {
  check_sigma(sigma_x);
  if (R_x.empty()) throw std::invalid_argument("autocorrelation: empty R_x");
  const double sigma2 = sigma_x * sigma_x;
  if (std::abs(R_x[0] - sigma2) > 1e-9 * sigma2) {
    throw std::invalid_argument("autocorrelation: R_x(0) differs from sigma_x^2");
  }

  ClippingStats s;
  s.bias = b;
  s.sigma_x2 = sigma2;
  s.lambda_b = -b / sigma_x;
  s.K = bussgang_gain(b, sigma_x);
  const auto mom = clip_moments(b, sigma_x);
  s.mean_wp = mom.mean;
  s.power_wp = mom.power;
  s.R_x.assign(R_x.begin(), R_x.end());

  std::vector<double> abscissae(R_x.begin(), R_x.end());
  abscissae.push_back(0.0);
  abscissae.push_back(sigma2);
  const auto I = price_integral(abscissae, b, sigma_x);
  const double I0 = I[R_x.size()];
  const double Itop = I[R_x.size() + 1];

  s.C2 = s.mean_wp * s.mean_wp - I0;
  s.C1 = (s.power_wp - s.C2 - Itop) / sigma2;
  s.R_wp.resize(R_x.size());
  for (std::size_t n = 0; n < R_x.size(); ++n) s.R_wp[n] = I[n] + s.C1 * R_x[n] + s.C2;
  s.R_wp[0] = s.power_wp;
  return s;
}

std::vector<double> clipping_psd(std::span<const double> R_wp) {
  const auto spec = fft::forward_real(R_wp);
  const double scale = std::sqrt(static_cast<double>(R_wp.size()));
  std::vector<double> out(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) out[k] = spec[k].real() * scale;
  return out;
}

ClippingStats clipping_stats(const OfdmConfig& cfg, std::span<const double> p_norm, double b) {
  const double budget = cfg.P - b * b;
  if (!(budget > 0.0)) throw std::invalid_argument("clipping_stats: bias leaves no power for the subcarriers");
  const double sigma_x = std::sqrt(budget / cfg.N);
  auto rx = signal_autocorrelation(cfg, p_norm, b);
  ClippingStats s = autocorrelation(b, sigma_x, rx);
  s.P_wp = clipping_psd(s.R_wp);
  return s;
}

SnrProfile snr_profiles(const ClippingStats& stats, const ChannelState& chan, const OfdmConfig& cfg,
                        const NoiseParams& noise) {
  const std::size_t n_data = cfg.data_subcarriers();
  if (stats.P_wp.size() != static_cast<std::size_t>(cfg.N) || chan.H_c.size() != n_data ||
      chan.H_s.size() != n_data) {
    throw std::invalid_argument("snr_profiles: inconsistent N across inputs");
  }
  const double turb = noise.gain_moment == GainMoment::MeanOfSquare ? std::exp(chan.sigma_t2) : 1.0;
  const double g_c = chan.h_bar_c * chan.h_bar_c * turb;
  const double g_s = noise.reflectivity * noise.reflectivity * chan.h_bar_s * chan.h_bar_s * turb;
  const double signal = stats.K * stats.K * (cfg.P - stats.bias * stats.bias);
  const double floor_c = noise.N_c * cfg.delta_f / (2.0 * g_c);
  const double floor_s = noise.N_s * cfg.delta_f / (2.0 * g_s);

  SnrProfile out;
  out.gamma_c.resize(n_data);
  out.gamma_s.resize(n_data);
  for (std::size_t i = 0; i < n_data; ++i) {
    const double pwp = std::max(stats.P_wp[i + 1], 0.0);
    const double hc = std::norm(chan.H_c[i]);
    const double hs = std::norm(chan.H_s[i]);
    out.gamma_c[i] = hc * signal / (floor_c + hc * pwp);
    out.gamma_s[i] = hs * signal / (floor_s + hs * pwp);
  }
  return out;
}

}  // namespace fsoisac
