#include "fsoisac/fft.hpp"
#include "fsoisac/mc_harness.hpp"
#include "fsoisac/scenario_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace fsoisac;

namespace {

SystemModel reference_model(int N, int M) {
  auto s = load_scenario(FSOISAC_SCENARIO_DIR "/reference.json");
  s.ofdm.N = N;
  s.ofdm.M = M;
  return build_model(s);
}

TimeSignal test_signal(const OfdmConfig& cfg, double b, std::uint64_t seed) {
  return to_time_domain(generate_frame(cfg, uniform_allocation(cfg), b, seed), cfg, b, true);
}

// Per-bin cross spectrum summed over symbols, from a naive DFT.
std::vector<std::complex<double>> naive_cross(std::span<const double> rx, std::span<const double> ref,
                                              const FrameLayout& layout) {
  const std::size_t N = layout.N;
  const std::size_t sym = N + layout.guard;
  std::vector<std::complex<double>> S(N / 2);
  for (std::size_t m = 0; m < rx.size() / sym; ++m) {
    for (std::size_t k = 1; k < N / 2; ++k) {
      std::complex<double> Y;
      std::complex<double> X;
      for (std::size_t n = 0; n < N; ++n) {
        const auto e = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * n) / N);
        Y += rx[m * sym + layout.guard + n] * e;
        X += ref[m * sym + layout.guard + n] * e;
      }
      S[k] += Y * std::conj(X);
    }
  }
  return S;
}

double band_correlation(const std::vector<std::complex<double>>& S, std::size_t N, double lag) {
  double total = 0.0;
  for (std::size_t k = 1; k < S.size(); ++k) {
    total += std::real(S[k] * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) * lag / N));
  }
  return total;
}

// Circular correlation of the symbol cores in the time domain.
double circular_correlation(std::span<const double> rx, std::span<const double> ref, const FrameLayout& layout,
                            std::size_t lag) {
  const std::size_t N = layout.N;
  const std::size_t sym = N + layout.guard;
  double total = 0.0;
  for (std::size_t m = 0; m < rx.size() / sym; ++m) {
    const std::size_t base = m * sym + layout.guard;
    for (std::size_t n = 0; n < N; ++n) total += rx[base + n] * ref[base + (n + N - lag) % N];
  }
  return total;
}

}  // namespace

TEST_CASE("ToF estimate is exact at an integer delay") {
  const auto model = reference_model(64, 4);
  const auto& cfg = model.cfg;
  const auto t = test_signal(cfg, 0.3, 1);
  const FrameLayout layout{64, cfg.guard_samples()};
  TofOptions opt;
  opt.layout = layout;
  const double rate = cfg.sample_rate();
  REQUIRE(layout.guard == 26);
  for (int d : {0, 1, 5, 19}) {
    const auto rx = delay_frame(t.pre_clip, layout, d);
    CHECK(estimate_tof(rx, t.pre_clip, rate, Interpolation::None, opt) == static_cast<double>(d) / rate);
    CHECK(estimate_tof(rx, t.pre_clip, rate, Interpolation::Parabolic, opt) * rate ==
          doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("parabolic ToF against a fine-grid correlation search") {
  OfdmConfig cfg;
  cfg.N = 32;
  cfg.M = 2;
  const auto t = test_signal(cfg, 0.2, 4);
  const FrameLayout layout{32, cfg.guard_samples()};
  TofOptions opt;
  opt.layout = layout;
  opt.max_lag = 16;
  for (double d : {2.37, 7.5, 11.81}) {
    CAPTURE(d);
    const auto rx = delay_frame(t.pre_clip, layout, d);
    const auto S = naive_cross(rx, t.pre_clip, layout);
    double best = -1e300;
    double best_lag = 0.0;
    for (int i = 0; i <= 16000; ++i) {
      const double lag = 1e-3 * i;
      const double c = band_correlation(S, 32, lag);
      if (c > best) {
        best = c;
        best_lag = lag;
      }
    }
    CHECK(std::abs(best_lag - d) <= 1e-3);
    const double est = estimate_tof(rx, t.pre_clip, 1.0, Interpolation::Parabolic, opt);
    CHECK(std::abs(est - best_lag) < 0.1);
  }
}

TEST_CASE("frequency-domain correlation equals direct correlation") {
  OfdmConfig cfg;
  cfg.N = 32;
  cfg.M = 3;
  const FrameLayout layout{32, cfg.guard_samples()};
  TofOptions opt;
  opt.layout = layout;
  opt.max_lag = 32;
  opt.oversample = 1;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rx(3 * (32 + layout.guard));
    std::vector<double> ref(rx.size());
    for (auto& v : rx) v = g(rng);
    for (auto& v : ref) v = g(rng);
    std::size_t best = 0;
    double best_c = -1e300;
    for (std::size_t l = 0; l < 32; ++l) {
      const double c = circular_correlation(rx, ref, layout, l);
      if (c > best_c) {
        best_c = c;
        best = l;
      }
    }
    CHECK(estimate_tof(rx, ref, 1.0, Interpolation::None, opt) == static_cast<double>(best));
  }
}

TEST_CASE("ToF estimate without signal spreads over the window") {
  OfdmConfig cfg;
  cfg.N = 64;
  cfg.M = 2;
  const FrameLayout layout{64, cfg.guard_samples()};
  TofOptions opt;
  opt.layout = layout;
  opt.max_lag = 64;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const auto t = test_signal(cfg, 0.2, 9);
  std::array<int, 4> bins{};
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    std::vector<double> rx(t.pre_clip.size());
    for (auto& v : rx) v = g(rng);
    const double est = estimate_tof(rx, t.pre_clip, 1.0, Interpolation::Parabolic, opt);
    REQUIRE(est >= -0.5);
    REQUIRE(est < 64.5);
    bins[std::min(3, static_cast<int>(std::max(0.0, est) / 16.0))]++;
  }
  for (int c : bins) CHECK(std::abs(c - trials / 4) < 40);
}

TEST_CASE("estimate_tof argument checks") {
  const std::vector<double> a(8, 1.0);
  const std::vector<double> b(7, 1.0);
  CHECK_THROWS_AS(estimate_tof({}, {}, 1.0, Interpolation::None, {}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_tof(a, b, 1.0, Interpolation::None, {}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_tof(a, a, 0.0, Interpolation::None, {}), std::invalid_argument);
}

TEST_CASE("frame delay") {
  OfdmConfig cfg;
  cfg.N = 32;
  cfg.M = 2;
  const FrameLayout layout{32, cfg.guard_samples()};
  const auto t = test_signal(cfg, 0.2, 2);
  const std::size_t sym = 32 + layout.guard;

  const auto same = delay_frame(t.pre_clip, layout, 0.0);
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i] == doctest::Approx(t.pre_clip[i]).epsilon(1e-12));

  // An integer delay is a cyclic shift of each core, with the prefix rebuilt.
  const auto shifted = delay_frame(t.pre_clip, layout, 3.0);
  for (std::size_t m = 0; m < 2; ++m) {
    for (std::size_t n = 0; n < 32; ++n) {
      const double expect = t.pre_clip[m * sym + layout.guard + (n + 29) % 32];
      CHECK(std::abs(shifted[m * sym + layout.guard + n] - expect) < 1e-12);
    }
    for (std::size_t i = 0; i < layout.guard; ++i) {
      CHECK(shifted[m * sym + i] == shifted[m * sym + 32 + i]);
    }
  }

  const auto twice = delay_frame(delay_frame(t.pre_clip, layout, 1.25), layout, 2.5);
  const auto once = delay_frame(t.pre_clip, layout, 3.75);
  double worst = 0.0;
  for (std::size_t i = 0; i < once.size(); ++i) worst = std::max(worst, std::abs(twice[i] - once[i]));
  CHECK(worst < 1e-12);

  CHECK_THROWS_AS(delay_frame(std::vector<double>(5, 0.0), layout, 1.0), std::invalid_argument);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4));
  std::set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 4; ++p) {
    for (std::uint64_t t = 0; t < 100; ++t) {
      for (std::uint64_t u = 0; u < 3; ++u) seen.insert(derive_seed(7, p, t, u));
    }
  }
  CHECK(seen.size() == 1200);
}

TEST_CASE("clipping model verification") {
  OfdmConfig cfg;
  cfg.N = 256;
  cfg.M = 16;
  const auto p = uniform_allocation(cfg);
  ClipVerifyOptions opt;
  opt.seed = 5;

  SUBCASE("zero bias") {
    const auto rep = verify_clipping_model(cfg, 0.0, p, opt);
    CHECK(rep.samples >= 1000000);
    const auto* k = rep.find("K");
    REQUIRE(k != nullptr);
    CHECK(k->analytic == doctest::Approx(0.5));
    CHECK(std::abs(k->empirical - 0.5) < 0.5 * 0.005);
    CHECK(rep.all_pass());
    CHECK_FALSE(rep.vanishing);
  }

  SUBCASE("vanishing clipping uses absolute tolerances") {
    const double sigma = std::sqrt(cfg.P / cfg.N);
    opt.samples = 200000;
    const auto rep = verify_clipping_model(cfg, 3.0 * sigma, p, opt);
    CHECK(rep.vanishing);
    const auto* pw = rep.find("power_wp");
    REQUIRE(pw != nullptr);
    CHECK(pw->absolute);
    CHECK(rep.all_pass());
  }

  SUBCASE("reports are reproducible") {
    opt.samples = 50000;
    const auto a = verify_clipping_model(cfg, 0.05, p, opt);
    const auto b = verify_clipping_model(cfg, 0.05, p, opt);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) CHECK(a.checks[i].empirical == b.checks[i].empirical);
    opt.workers = 3;
    const auto c = verify_clipping_model(cfg, 0.05, p, opt);
    for (std::size_t i = 0; i < a.checks.size(); ++i) CHECK(a.checks[i].empirical == c.checks[i].empirical);
  }
}

TEST_CASE("RMSE against the CRB") {
  const auto model = reference_model(64, 8);
  const auto& cfg = model.cfg;
  const auto p = uniform_allocation(cfg);
  // b = 0.5 leaves about 4.6 sigma_x of headroom, so thermal noise dominates.
  const double b = 0.5;
  McCampaign c;
  c.trials = 1000;
  c.seed = 11;
  c.true_tof = 3.3 / cfg.sample_rate();
  c.ns_sweep_dbhz = {-150.0};

  const auto base = rmse_vs_crb(c, model, b, p);
  REQUIRE(base.size() == 1);
  CHECK(base[0].ratio > 0.9);
  CHECK(base[0].ratio < 1.3);
  CHECK(std::abs(base[0].mean_error_m) < 3.0 * base[0].rmse_m / std::sqrt(1000.0));

  SUBCASE("reproducible and worker independent") {
    const auto again = rmse_vs_crb(c, model, b, p);
    CHECK(again[0].rmse_m == base[0].rmse_m);
    c.workers = 4;
    CHECK(rmse_vs_crb(c, model, b, p)[0].rmse_m == base[0].rmse_m);
  }

  SUBCASE("doubling M") {
    const auto wide = reference_model(64, 16);
    const auto pts = rmse_vs_crb(c, wide, b, p);
    CHECK(pts[0].crb_m == doctest::Approx(base[0].crb_m / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(pts[0].rmse_m == doctest::Approx(base[0].rmse_m / std::sqrt(2.0)).epsilon(0.1));
  }

  SUBCASE("high-frequency allocation beats low-frequency allocation") {
    std::vector<double> low(31, 0.0);
    for (std::size_t k = 0; k < 25; ++k) low[k] = 0.02;
    const auto lp = sensing_lp(std::vector<double>(31, 1.0), 0.02);
    const auto r_low = rmse_vs_crb(c, model, b, low);
    const auto r_lp = rmse_vs_crb(c, model, b, lp);
    CHECK(r_lp[0].rmse_m < r_low[0].rmse_m);
  }

  SUBCASE("turbulence with zero scintillation changes nothing") {
    auto calm = model;
    calm.channel.sigma_t2 = 0.0;
    const auto off = rmse_vs_crb(c, calm, b, p);
    c.turbulence = true;
    const auto on = rmse_vs_crb(c, calm, b, p);
    CHECK(on[0].rmse_m == off[0].rmse_m);
  }

  SUBCASE("campaign checks") {
    c.trials = 0;
    CHECK_THROWS_AS(rmse_vs_crb(c, model, b, p), std::invalid_argument);
    c.trials = 10;
    c.true_tof = cfg.T_g;
    CHECK_THROWS_AS(rmse_vs_crb(c, model, b, p), std::invalid_argument);
    c.true_tof = 0.0;
    c.trials = 5;
    CHECK(rmse_vs_crb(c, model, b, p)[0].low_trials);
  }
}

TEST_CASE("sensing noise per real sample") {
  OfdmConfig cfg;
  CHECK(sensing_noise_variance(1e-10, cfg) == doctest::Approx(1e-10 * cfg.bandwidth() / 2.0));
}
