#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace fsoisac {

/// Link-budget description of one optical path.
struct LinkParams {
  double L = 200.0;                 // path length [m]
  double lambda_opt = 905e-9;       // wavelength [m]
  double Cn2 = 5e-14;               // refractive-index structure constant [m^-2/3]
  double atten_db_per_km = -12.8;   // combined alpha*V^beta; the sign is ignored, always a loss
  double theta = 0.5e-3;            // full beam divergence [rad]
  double A = 10e-4;                 // receiver aperture [m^2]
  double G_T = 1.0;
  double G_R = 10.0;
  double reflectivity = 0.5;        // target reflectivity, sensing path only
  double noise_psd = 1e-10;         // receiver noise PSD [W/Hz]

  void validate() const;
};

/// Stationary gains and normalized frequency responses of both paths.
struct ChannelState {
  double h_bar_c = 1.0;
  double h_bar_s = 1.0;
  double sigma_t2 = 0.0;
  std::vector<std::complex<double>> H_c;  // k = 1 .. N/2-1
  std::vector<std::complex<double>> H_s;
  std::vector<std::string> warnings;

  /// Line-of-sight responses H(k) = 1 on every data subcarrier.
  static ChannelState line_of_sight(double h_bar_c, double h_bar_s, double sigma_t2, int N);
};

/// Rytov approximation 1.23 (2 pi / lambda)^(7/6) L^(11/6) Cn2.
double scintillation_index(const LinkParams& link);

/// i.i.d. log-normal scintillation draws with unit mean and log-variance sigma_t2.
std::vector<double> sample_turbulence(double sigma_t2, std::uint64_t seed, std::size_t n);

/// Log-normal CDF matching sample_turbulence.
double turbulence_cdf(double sigma_t2, double value);

/// Atmospheric loss over a path of the given length (linear, <= 1).
double atmospheric_loss(double atten_db_per_km, double length_m);

/// A / (pi (L theta / 2)^2), clamped to 1. Sets `clamped` when the clamp fires.
double geometric_loss(double aperture, double length_m, double theta, bool* clamped = nullptr);

/// One-way gain for the communication path, round-trip (2L) attenuation and spreading for
/// sensing. Responses default to line-of-sight over N/2-1 subcarriers.
ChannelState stationary_gains(const LinkParams& link_c, const LinkParams& link_s, int N);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace fsoisac
