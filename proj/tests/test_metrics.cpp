#include "fsoisac/metrics.hpp"
#include "fsoisac/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fsoisac;

namespace {

constexpr double kC = 299792458.0;

SnrProfile flat(std::size_t n, double gc, double gs) {
  SnrProfile s;
  s.gamma_c.assign(n, gc);
  s.gamma_s.assign(n, gs);
  return s;
}

std::vector<double> random_allocation(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) {
    v = e(rng);
    total += v;
  }
  for (auto& v : p) v *= 0.5 / total;
  return p;
}

}  // namespace

TEST_CASE("spectral efficiency closed forms") {
  OfdmConfig cfg;
  const auto p = uniform_allocation(cfg);
  CHECK(spectral_efficiency(flat(511, 0.0, 1.0), p, cfg) == 0.0);
  const double gamma = 3000.0;
  const double expected = 511.0 / (cfg.bandwidth() * cfg.T_o()) * std::log2(1.0 + gamma / 1022.0);
  CHECK(spectral_efficiency(flat(511, gamma, 1.0), p, cfg) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("Fisher information closed forms") {
  OfdmConfig cfg;
  const auto p = uniform_allocation(cfg);
  CHECK(fisher_information(flat(511, 1.0, 0.0), p, cfg) == 0.0);
  const double g = 0.5;
  const double N = cfg.N;
  const double sum_k2 = (N / 2 - 1) * (N / 2) * (N - 1) / 6.0;
  const double expected = 8.0 * std::numbers::pi * std::numbers::pi * cfg.M * cfg.delta_f * cfg.delta_f * g /
                          (N * (N - 2)) * sum_k2;
  CHECK(fisher_information(flat(511, 1.0, g), p, cfg) == doctest::Approx(expected).epsilon(1e-12));

  // Moving power from k = 1 to the top subcarrier raises the information.
  auto q = p;
  q.front() -= 0.0005;
  q.back() += 0.0005;
  CHECK(fisher_information(flat(511, 1.0, g), q, cfg) > fisher_information(flat(511, 1.0, g), p, cfg));
}

TEST_CASE("metric report and distance conversion") {
  OfdmConfig cfg;
  const auto p = uniform_allocation(cfg);
  const auto snr = flat(511, 2000.0, 0.3);
  const auto m = evaluate_metrics(snr, p, cfg);
  CHECK(m.I_tau == doctest::Approx(fisher_information(snr, p, cfg)));
  CHECK(m.I == doctest::Approx(4.0 * m.I_tau / (kC * kC)).epsilon(1e-14));
  CHECK(m.crb_distance == doctest::Approx(kC / (2.0 * std::sqrt(m.I_tau))).epsilon(1e-14));
  CHECK(m.crb_distance == doctest::Approx(1.0 / std::sqrt(m.I)).epsilon(1e-14));
  CHECK(std::isinf(crb_distance(0.0)));
}

TEST_CASE("normalized thresholds") {
  OfdmConfig cfg;
  const double precision = 0.04;
  const double v0 = varsigma0_from_precision(precision);
  CHECK(v0 == doctest::Approx(kC / (2.0 * precision)));
  const double thr = normalized_sensing_threshold(precision, cfg);
  CHECK(thr == doctest::Approx(cfg.N * v0 * v0 / (8.0 * std::numbers::pi * std::numbers::pi * cfg.M * cfg.delta_f *
                                                  cfg.delta_f)));
  // An allocation meeting the normalized threshold exactly meets the precision exactly.
  const auto p = uniform_allocation(cfg);
  const double g = thr / weighted_sensing_sum(std::vector<double>(511, 1.0), p);
  const auto m = evaluate_metrics(flat(511, 1.0, g), p, cfg);
  CHECK(m.crb_distance == doctest::Approx(precision).epsilon(1e-12));

  const double cap = normalized_capacity_threshold(2.0, cfg);
  CHECK(cap == doctest::Approx(2.0 * cfg.bandwidth() * cfg.T_o() * std::numbers::ln2));
  const auto snr = flat(511, 5000.0, 1.0);
  CHECK(log_capacity_sum(snr.gamma_c, p) / (cfg.bandwidth() * cfg.T_o() * std::numbers::ln2) ==
        doctest::Approx(spectral_efficiency(snr, p, cfg)).epsilon(1e-13));
}

TEST_CASE("linearity of I and concavity of C") {
  OfdmConfig cfg;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(10.0, 5000.0);
  SnrProfile snr;
  for (int i = 0; i < 511; ++i) {
    snr.gamma_c.push_back(u(rng));
    snr.gamma_s.push_back(u(rng) * 1e-3);
  }
  for (int t = 0; t < 50; ++t) {
    const auto p = random_allocation(511, rng);
    const auto q = random_allocation(511, rng);
    std::vector<double> mid(511);
    for (int i = 0; i < 511; ++i) mid[i] = 0.5 * (p[i] + q[i]);
    CHECK(fisher_information(snr, mid, cfg) ==
          doctest::Approx(0.5 * (fisher_information(snr, p, cfg) + fisher_information(snr, q, cfg))).epsilon(1e-12));
    CHECK(spectral_efficiency(snr, mid, cfg) >=
          0.5 * (spectral_efficiency(snr, p, cfg) + spectral_efficiency(snr, q, cfg)) - 1e-12);
  }
}

TEST_CASE("capacity gradient against central differences") {
  OfdmConfig cfg;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(10.0, 50000.0);
  SnrProfile snr;
  for (int i = 0; i < 511; ++i) {
    snr.gamma_c.push_back(u(rng));
    snr.gamma_s.push_back(1.0);
  }
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto p = random_allocation(511, rng);
    const auto grad = spectral_efficiency_gradient(snr, p, cfg);
    const std::size_t k = rng() % 511;
    const double h = 1e-4 * std::max(p[k], 1e-3);
    auto up = p;
    auto dn = p;
    up[k] += h;
    dn[k] -= h;
    const double fd = (spectral_efficiency(snr, up, cfg) - spectral_efficiency(snr, dn, cfg)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::abs(grad[k]));
  }
  CHECK(worst < 1e-6);
}
