#include "fsoisac/signal.hpp"

#include "fsoisac/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace fsoisac {

std::size_t OfdmConfig::guard_samples() const {
  const double raw = T_g * sample_rate();
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

void OfdmConfig::validate() const {
  if (N < 8 || N % 2 != 0) throw std::invalid_argument("OfdmConfig: N must be even and >= 8");
  if (M < 1) throw std::invalid_argument("OfdmConfig: M must be >= 1");
  if (!(delta_f > 0.0)) throw std::invalid_argument("OfdmConfig: delta_f must be positive");
  if (!(T_g >= 0.0)) throw std::invalid_argument("OfdmConfig: T_g must be non-negative");
  if (!(P > 0.0)) throw std::invalid_argument("OfdmConfig: P must be positive");
}

OfdmConfig OfdmConfig::reference() { return OfdmConfig{64, 1024, 0.2e6, 2e-6, 1.0}; }

void validate_allocation(const OfdmConfig& cfg, std::span<const double> p_norm) {
  if (p_norm.size() != cfg.data_subcarriers()) {
    throw std::invalid_argument("allocation has " + std::to_string(p_norm.size()) + " entries, expected " +
                                std::to_string(cfg.data_subcarriers()));
  }
  for (double p : p_norm) {
    if (!(p >= 0.0)) throw std::invalid_argument("allocation has a negative or NaN entry");
  }
  const double sum = std::accumulate(p_norm.begin(), p_norm.end(), 0.0);
  if (std::abs(sum - 0.5) > 1e-9) {
    throw std::invalid_argument("allocation sums to " + std::to_string(sum) + ", expected 1/2");
  }
}

std::vector<double> uniform_allocation(const OfdmConfig& cfg) {
  return std::vector<double>(cfg.data_subcarriers(), 1.0 / (cfg.N - 2));
}

FrequencyGrid generate_frame(const OfdmConfig& cfg, std::span<const double> p_norm, double bias,
                             std::uint64_t seed) {
  cfg.validate();
  validate_allocation(cfg, p_norm);
  if (bias < 0.0 || bias * bias > cfg.P) throw std::invalid_argument("generate_frame: bias outside [0, sqrt(P)]");

  FrequencyGrid grid;
  grid.N = cfg.N;
  grid.M = cfg.M;
  grid.X.assign(static_cast<std::size_t>(cfg.N) * cfg.M, {0.0, 0.0});
  grid.p_norm.assign(p_norm.begin(), p_norm.end());

  const double budget = cfg.P - bias * bias;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int half = cfg.N / 2;
  for (int m = 0; m < cfg.M; ++m) {
    for (int k = 1; k < half; ++k) {
      const double scale = std::sqrt(budget * p_norm[k - 1] / 2.0);
      const double re = gauss(rng);
      const double im = gauss(rng);
      grid.at(k, m) = {scale * re, scale * im};
      grid.at(cfg.N - k, m) = std::conj(grid.at(k, m));
    }
  }
  return grid;
}

TimeSignal to_time_domain(const FrequencyGrid& grid, const OfdmConfig& cfg, double bias, bool clip) {
  if (grid.N != cfg.N || grid.M != cfg.M) throw std::invalid_argument("to_time_domain: grid/config mismatch");
  if (bias < 0.0 || bias * bias > cfg.P * (1.0 + 1e-15)) {
    throw std::invalid_argument("to_time_domain: bias outside [0, sqrt(P)]");
  }
  TimeSignal out;
  out.bias = bias;
  out.clipped = clip;
  out.guard = cfg.guard_samples();
  out.N = static_cast<std::size_t>(cfg.N);
  const std::size_t sym = out.guard + out.N;
  out.pre_clip.resize(sym * static_cast<std::size_t>(cfg.M));
  out.samples.resize(out.pre_clip.size());

  for (int m = 0; m < cfg.M; ++m) {
    const auto x = fft::inverse_real(grid.symbol(m));
    double* dst = out.pre_clip.data() + static_cast<std::size_t>(m) * sym;
    std::copy(x.end() - static_cast<std::ptrdiff_t>(out.guard), x.end(), dst);
    std::copy(x.begin(), x.end(), dst + out.guard);
  }
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double v = out.pre_clip[i] + bias;
    out.samples[i] = clip ? std::max(v, 0.0) : v;
  }
  return out;
}

std::vector<double> empirical_clipping_noise(const TimeSignal& time, double bussgang_gain) {
  if (time.samples.size() != time.pre_clip.size()) {
    throw std::invalid_argument("empirical_clipping_noise: stream length mismatch");
  }
  std::vector<double> w(time.samples.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = time.samples[i] - time.bias - bussgang_gain * time.pre_clip[i];
  }
  return w;
}

std::vector<double> clip_nonnegative(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double s) { return std::max(s, 0.0); });
  return out;
}

void write_raw_f64le(const std::filesystem::path& path, std::span<const double> samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  for (double s : samples) {
    auto bits = std::bit_cast<std::uint64_t>(s);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

}  // namespace fsoisac
