#include "fsoisac/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fsoisac {

void LinkParams::validate() const {
  if (!(L > 0.0) || !(lambda_opt > 0.0) || !(theta > 0.0) || !(A > 0.0) || !(G_T > 0.0) || !(G_R > 0.0)) {
    throw std::invalid_argument("LinkParams: geometry and gains must be positive");
  }
  if (!(Cn2 >= 0.0)) throw std::invalid_argument("LinkParams: Cn2 must be non-negative");
  if (!(reflectivity > 0.0) || reflectivity > 1.0) throw std::invalid_argument("LinkParams: reflectivity must be in (0, 1]");
  if (!(noise_psd > 0.0)) throw std::invalid_argument("LinkParams: noise PSD must be positive");
  if (!std::isfinite(atten_db_per_km)) throw std::invalid_argument("LinkParams: attenuation must be finite");
}

ChannelState ChannelState::line_of_sight(double h_bar_c, double h_bar_s, double sigma_t2, int N) {
  ChannelState s;
  s.h_bar_c = h_bar_c;
  s.h_bar_s = h_bar_s;
  s.sigma_t2 = sigma_t2;
  s.H_c.assign(static_cast<std::size_t>(N / 2 - 1), {1.0, 0.0});
  s.H_s = s.H_c;
  return s;
}

double scintillation_index(const LinkParams& link) {
  const double k = 2.0 * std::numbers::pi / link.lambda_opt;
  return 1.23 * std::pow(k, 7.0 / 6.0) * std::pow(link.L, 11.0 / 6.0) * link.Cn2;
}

std::vector<double> sample_turbulence(double sigma_t2, std::uint64_t seed, std::size_t n) {
  if (!(sigma_t2 >= 0.0)) throw std::invalid_argument("sample_turbulence: sigma_t2 must be non-negative");
  std::vector<double> out(n, 1.0);
  if (sigma_t2 == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(-sigma_t2 / 2.0, std::sqrt(sigma_t2));
  for (auto& v : out) v = std::exp(z(rng));
  return out;
}

double turbulence_cdf(double sigma_t2, double value) {
  if (value <= 0.0) return 0.0;
  if (sigma_t2 == 0.0) return value >= 1.0 ? 1.0 : 0.0;
  const double z = (std::log(value) + sigma_t2 / 2.0) / std::sqrt(sigma_t2);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double atmospheric_loss(double atten_db_per_km, double length_m) {
  return std::pow(10.0, -std::abs(atten_db_per_km) * (length_m / 1000.0) / 10.0);
}

double geometric_loss(double aperture, double length_m, double theta, bool* clamped) {
  const double radius = length_m * theta / 2.0;
  const double raw = aperture / (std::numbers::pi * radius * radius);
  if (clamped != nullptr) *clamped = raw > 1.0;
  return std::min(raw, 1.0);
}

ChannelState stationary_gains(const LinkParams& link_c, const LinkParams& link_s, int N) {
  link_c.validate();
  link_s.validate();
  ChannelState state = ChannelState::line_of_sight(1.0, 1.0, scintillation_index(link_c), N);

  bool clamp_c = false;
  const double lg_c = geometric_loss(link_c.A, link_c.L, link_c.theta, &clamp_c);
  state.h_bar_c = atmospheric_loss(link_c.atten_db_per_km, link_c.L) * lg_c * link_c.G_T * link_c.G_R;

  // Round trip: the target re-radiates from a point, so both attenuation and beam
  // spreading act over 2L.
  bool clamp_s = false;
  const double round_trip = 2.0 * link_s.L;
  const double lg_s = geometric_loss(link_s.A, round_trip, link_s.theta, &clamp_s);
  state.h_bar_s = atmospheric_loss(link_s.atten_db_per_km, round_trip) * lg_s * link_s.G_T * link_s.G_R;

  if (clamp_c) state.warnings.emplace_back("communication geometric loss clamped to 1 (aperture exceeds footprint)");
  if (clamp_s) state.warnings.emplace_back("sensing geometric loss clamped to 1 (aperture exceeds footprint)");
  return state;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

}  // namespace fsoisac
