#pragma once

#include <cstddef>

namespace fsoisac {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Frame geometry and electrical power budget of a DCO-OFDM link.
///
/// The primary fields are stored; the derived timing quantities are computed on
/// demand so that T_o = T + T_g and B = N * delta_f always hold.
struct OfdmConfig {
  int M = 64;               // OFDM symbols per frame
  int N = 1024;             // subcarriers per symbol (even)
  double delta_f = 0.2e6;   // subcarrier spacing [Hz]
  double T_g = 2e-6;        // guard interval [s]
  double P = 1.0;           // total electrical power [W]

  double T() const { return 1.0 / delta_f; }
  double T_o() const { return T() + T_g; }
  double bandwidth() const { return N * delta_f; }
  double sample_rate() const { return N / T(); }

  /// Cyclic-prefix length in samples, ceil(T_g * R_s).
  std::size_t guard_samples() const;
  std::size_t symbol_samples() const { return guard_samples() + static_cast<std::size_t>(N); }
  std::size_t frame_samples() const { return static_cast<std::size_t>(M) * symbol_samples(); }

  /// Number of independent (non-mirrored, non-null) subcarriers, N/2 - 1.
  std::size_t data_subcarriers() const { return static_cast<std::size_t>(N / 2 - 1); }

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  /// Reference configuration: M=64, N=1024, 0.2 MHz spacing, 2 us guard, 1 W.
  static OfdmConfig reference();
};

}  // namespace fsoisac
