#pragma once

#include "fsoisac/ofdm_config.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fsoisac {

/// Frequency-domain content of one frame. Symbol m occupies X[m*N, (m+1)*N).
struct FrequencyGrid {
  int N = 0;
  int M = 0;
  std::vector<std::complex<double>> X;
  std::vector<double> p_norm;  // normalized allocation over k = 1 .. N/2-1

  std::complex<double>& at(int k, int m) { return X[static_cast<std::size_t>(m) * N + k]; }
  const std::complex<double>& at(int k, int m) const { return X[static_cast<std::size_t>(m) * N + k]; }
  std::span<const std::complex<double>> symbol(int m) const {
    return {X.data() + static_cast<std::size_t>(m) * N, static_cast<std::size_t>(N)};
  }
};

/// Sampled frame. Each symbol is laid out as [cyclic prefix | N core samples].
struct TimeSignal {
  std::vector<double> samples;   // transmitted x+(n) = {x(n) + b}+, or x(n) + b when not clipped
  std::vector<double> pre_clip;  // unbiased x(n)
  double bias = 0.0;
  bool clipped = false;
  std::size_t guard = 0;
  std::size_t N = 0;

  std::size_t symbol_count() const { return samples.size() / (guard + N); }
  /// Samples of symbol m with the cyclic prefix removed.
  std::span<const double> core(std::span<const double> stream, std::size_t m) const {
    return stream.subspan(m * (guard + N) + guard, N);
  }
};

/// Throws std::invalid_argument unless p has N/2-1 non-negative entries summing to 1/2 (1e-9).
void validate_allocation(const OfdmConfig& cfg, std::span<const double> p_norm);

/// Uniform allocation 1/(N-2) on every data subcarrier.
std::vector<double> uniform_allocation(const OfdmConfig& cfg);

/// Draws circular complex Gaussian symbols with E|X(k,m)|^2 = (P - b^2) * p(k) on each
/// bin of the Hermitian pair, which gives a time-domain variance of (P - b^2) / N.
FrequencyGrid generate_frame(const OfdmConfig& cfg, std::span<const double> p_norm, double bias,
                             std::uint64_t seed);

/// Unitary IDFT per symbol, cyclic prefix, DC bias and (optionally) clipping at zero.
TimeSignal to_time_domain(const FrequencyGrid& grid, const OfdmConfig& cfg, double bias, bool clip = true);

/// w_p(n) = {x(n) + b}+ - b - K x(n) for every sample of the frame.
std::vector<double> empirical_clipping_noise(const TimeSignal& time, double bussgang_gain);

/// {v}+ applied elementwise.
std::vector<double> clip_nonnegative(std::span<const double> v);

/// Raw little-endian float64 dump for offline inspection.
void write_raw_f64le(const std::filesystem::path& path, std::span<const double> samples);

}  // namespace fsoisac
