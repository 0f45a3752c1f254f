#include "fsoisac/clipnoise.hpp"
#include "fsoisac/signal.hpp"
#include "oracle/price_oracle.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace fsoisac;

namespace {

// E[g(x)^order] for x ~ N(0, s^2) and g(x) = {x + b}+ - b - K x, by direct quadrature.
double clip_moment_oracle(double b, double s, int order) {
  const boost::math::normal_distribution<double> nd(0.0, 1.0);
  const double K = boost::math::cdf(nd, b / s);
  auto f = [&](double u) {
    const double x = s * u;
    const double g = std::max(x + b, 0.0) - b - K * x;
    return std::pow(g, order) * boost::math::pdf(nd, u);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  // The kink at u = -b/s splits the range; the density is below 1e-300 past |u| = 40.
  const double kink = -b / s;
  return GK::integrate(f, -40.0, kink, 15, 1e-14) + GK::integrate(f, kink, 40.0, 15, 1e-14);
}

std::vector<double> mixed_allocation(const OfdmConfig& cfg) {
  // Power rising with k, capped, summing to 1/2.
  const std::size_t n = cfg.data_subcarriers();
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = 0.2 + std::pow(static_cast<double>(i + 1) / static_cast<double>(n), 2);
    total += p[i];
  }
  for (auto& v : p) v *= 0.5 / total;
  return p;
}

}  // namespace

TEST_CASE("Bussgang gain") {
  CHECK(bussgang_gain(0.0, 1.0) == 0.5);
  const boost::math::normal_distribution<double> nd;
  CHECK(bussgang_gain(3.0, 1.0) == doctest::Approx(boost::math::cdf(nd, 3.0)).epsilon(1e-14));
  CHECK(bussgang_gain(3.0, 1.0) == doctest::Approx(0.9986501019683699).epsilon(1e-14));
  double prev = 0.5;
  for (double b = 0.25; b < 10.0; b += 0.25) {
    const double k = bussgang_gain(b, 1.0);
    CHECK(k >= prev);
    prev = k;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(bussgang_gain(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("clipping moments closed forms at zero bias") {
  for (double s : {1.0, 0.03125, 2.5}) {
    const auto m = clip_moments(0.0, s);
    CHECK(m.mean == doctest::Approx(s / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(m.power == doctest::Approx(s * s / 4.0).epsilon(1e-15));
  }
}

TEST_CASE("clipping moments against direct quadrature") {
  for (double beta : {0.1, 0.5, 1.0, 1.5, 1.99, 2.01, 2.5, 3.0, 4.0, 6.0}) {
    CAPTURE(beta);
    const double s = 0.7;
    const auto m = clip_moments(beta * s, s);
    CHECK(m.mean == doctest::Approx(clip_moment_oracle(beta * s, s, 1)).epsilon(1e-9));
    CHECK(m.power == doctest::Approx(clip_moment_oracle(beta * s, s, 2)).epsilon(1e-8));
  }
  const auto far = clip_moments(5.0, 1.0);
  CHECK(far.mean < 1e-5);
  CHECK(far.power < 1e-5);
}

TEST_CASE("clipping power falls with bias") {
  double prev = clip_moments(0.0, 1.0).power;
  for (double b = 0.1; b < 6.0; b += 0.1) {
    const double p = clip_moments(b, 1.0).power;
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("price integral matches the nested-quadrature oracle") {
  for (double b : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    for (int i = 0; i < 16; ++i) {
      const double r = -1.0 + 2.0 * i / 15.0;
      CAPTURE(b);
      CAPTURE(r);
      CHECK(std::abs(price_integral(r, b, 1.0) - oracle::price_nested(r, b, 1.0)) < 1e-10);
    }
  }
  CHECK(price_integral(-1.0, 0.7, 1.0) == 0.0);
  CHECK_THROWS_AS(price_integral(1.5, 0.0, 1.0), std::domain_error);
}

TEST_CASE("price integral scales with sigma and is convex") {
  const double s = 0.2;
  for (double r : {-0.5, 0.0, 0.3, 1.0}) {
    // I(r s^2; b s, s) = s^2 I(r; b, 1)
    CHECK(price_integral(r * s * s, 0.8 * s, s) == doctest::Approx(s * s * price_integral(r, 0.8, 1.0)).epsilon(1e-10));
  }
  double prev = 0.0;
  double prev_slope = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double r = -1.0 + i / 20.0;
    const double v = price_integral(r, 0.5, 1.0);
    const double slope = (v - prev) * 20.0;
    CHECK(v >= prev);
    CHECK(slope >= prev_slope - 1e-12);
    prev = v;
    prev_slope = slope;
  }
}

TEST_CASE("vector price integral agrees with the scalar one") {
  OfdmConfig cfg;
  const auto p = mixed_allocation(cfg);
  for (double b : {0.0, 0.02, 0.05, 0.1}) {
    const auto rx = signal_autocorrelation(cfg, p, b);
    const double s = std::sqrt(rx[0]);
    const auto I = price_integral(rx, b, s);
    double worst = 0.0;
    for (std::size_t n = 0; n < rx.size(); n += 13) worst = std::max(worst, std::abs(I[n] - price_integral(rx[n], b, s)));
    CHECK(worst < 1e-12 * s * s);
  }
}

TEST_CASE("signal autocorrelation from the allocation") {
  OfdmConfig cfg;
  cfg.N = 32;
  const auto p = mixed_allocation(cfg);
  const double b = 0.3;
  const auto rx = signal_autocorrelation(cfg, p, b);
  CHECK(rx[0] == (cfg.P - b * b) / cfg.N);
  for (int n = 0; n < cfg.N; ++n) {
    double direct = 0.0;
    for (int k = 1; k < cfg.N / 2; ++k) direct += 2.0 * p[k - 1] * std::cos(2.0 * std::numbers::pi * k * n / cfg.N);
    direct *= (cfg.P - b * b) / cfg.N;
    CHECK(rx[n] == doctest::Approx(direct).epsilon(1e-12).scale(rx[0]));
  }
}

TEST_CASE("white input gives flat clipping noise") {
  const double s = 0.5;
  std::vector<double> rx(64, 0.0);
  rx[0] = s * s;
  const auto st = autocorrelation(0.2, s, rx);
  CHECK(st.R_wp[0] == st.power_wp);
  for (std::size_t n = 1; n < rx.size(); ++n) CHECK(st.R_wp[n] == doctest::Approx(st.mean_wp * st.mean_wp).epsilon(1e-10));
  const auto psd = clipping_psd(st.R_wp);
  const double var = st.power_wp - st.mean_wp * st.mean_wp;
  for (std::size_t k = 1; k < psd.size(); ++k) CHECK(psd[k] == doctest::Approx(var).epsilon(1e-9));
}

TEST_CASE("clipping statistics invariants") {
  OfdmConfig cfg;
  const auto p = mixed_allocation(cfg);
  for (double b : {0.0, 0.02, 0.04, 0.08}) {
    CAPTURE(b);
    const auto st = clipping_stats(cfg, p, b);
    CHECK(st.K == doctest::Approx(bussgang_gain(b, std::sqrt(st.sigma_x2))));
    CHECK(st.C2 + price_integral(0.0, b, std::sqrt(st.sigma_x2)) ==
          doctest::Approx(st.mean_wp * st.mean_wp).epsilon(1e-8));
    for (int n = 1; n < cfg.N; ++n) {
      CHECK(st.R_wp[n] == doctest::Approx(st.R_wp[cfg.N - n]).epsilon(1e-10).scale(st.R_wp[0]));
    }
    double total = 0.0;
    const double peak = *std::max_element(st.P_wp.begin(), st.P_wp.end());
    for (double v : st.P_wp) {
      total += v;
      CHECK(v >= -1e-12 * peak);
    }
    CHECK(total / cfg.N == doctest::Approx(st.R_wp[0]).epsilon(1e-8));
    for (int k = 1; k < cfg.N; ++k) CHECK(st.P_wp[k] == doctest::Approx(st.P_wp[cfg.N - k]).epsilon(1e-9).scale(peak));
  }
  CHECK_THROWS_AS(clipping_stats(cfg, p, 1.0), std::invalid_argument);
}

TEST_CASE("clipping PSD of a constant") {
  const std::vector<double> c(16, 0.25);
  const auto psd = clipping_psd(c);
  CHECK(psd[0] == doctest::Approx(16 * 0.25));
  for (std::size_t k = 1; k < psd.size(); ++k) CHECK(std::abs(psd[k]) < 1e-15);
}

TEST_CASE("SNR profiles") {
  OfdmConfig cfg;
  const auto p = uniform_allocation(cfg);
  const auto chan = ChannelState::line_of_sight(0.6, 0.005, 0.1, cfg.N);
  NoiseParams noise;
  noise.N_c = 1e-10;
  noise.N_s = 1e-10;

  SUBCASE("vanishing clipping reduces to the thermal closed form") {
    const double b = 0.2;  // beta ~ 6.5
    const auto st = clipping_stats(cfg, p, b);
    const auto snr = snr_profiles(st, chan, cfg, noise);
    const double expected_c = 2.0 * 0.36 * st.K * st.K * (cfg.P - b * b) / (noise.N_c * cfg.delta_f);
    const double expected_s = 2.0 * 0.25 * 0.005 * 0.005 * st.K * st.K * (cfg.P - b * b) / (noise.N_s * cfg.delta_f);
    for (std::size_t i = 0; i < snr.gamma_c.size(); ++i) {
      CHECK(snr.gamma_c[i] == doctest::Approx(expected_c).epsilon(1e-6));
      CHECK(snr.gamma_s[i] == doctest::Approx(expected_s).epsilon(1e-6));
    }
  }

  SUBCASE("hand evaluation with clipping noise") {
    const double b = 0.03;
    const auto st = clipping_stats(cfg, p, b);
    const auto snr = snr_profiles(st, chan, cfg, noise);
    const std::size_t k = 100;
    const double floor_c = noise.N_c * cfg.delta_f / (2.0 * 0.36);
    CHECK(snr.gamma_c[k - 1] == doctest::Approx(st.K * st.K * (cfg.P - b * b) / (floor_c + st.P_wp[k])).epsilon(1e-12));
    CHECK(snr.gamma_c[k - 1] < 2.0 * 0.36 * st.K * st.K * (cfg.P - b * b) / (noise.N_c * cfg.delta_f));
  }

  SUBCASE("mean-of-square switch scales the thermal term") {
    const auto st = clipping_stats(cfg, p, 0.2);
    auto n2 = noise;
    n2.gain_moment = GainMoment::MeanOfSquare;
    const auto a = snr_profiles(st, chan, cfg, noise);
    const auto m = snr_profiles(st, chan, cfg, n2);
    CHECK(m.gamma_c[5] / a.gamma_c[5] == doctest::Approx(std::exp(0.1)).epsilon(1e-6));
  }

  SUBCASE("huge noise drives the SNR to zero") {
    auto loud = noise;
    loud.N_c = 1e10;
    const auto snr = snr_profiles(clipping_stats(cfg, p, 0.1), chan, cfg, loud);
    CHECK(*std::max_element(snr.gamma_c.begin(), snr.gamma_c.end()) < 1e-12);
  }

  SUBCASE("size mismatch is rejected") {
    const auto st = clipping_stats(cfg, p, 0.1);
    const auto small = ChannelState::line_of_sight(0.6, 0.005, 0.1, 64);
    CHECK_THROWS_AS(snr_profiles(st, small, cfg, noise), std::invalid_argument);
  }
}
