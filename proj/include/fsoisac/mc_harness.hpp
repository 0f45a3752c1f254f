#pragma once

#include "fsoisac/allocator.hpp"
#include "fsoisac/signal.hpp"
#include "fsoisac/system_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fsoisac {

enum class Interpolation { None, Parabolic };

const char* to_string(Interpolation i);

/// Symbol layout of a sample stream: [guard | N core] repeated.
struct FrameLayout {
  std::size_t N = 0;
  std::size_t guard = 0;
};

struct TofOptions {
  FrameLayout layout;
  std::size_t max_lag = 0;  // search lags [0, max_lag) samples; 0 means the guard length
  int oversample = 16;      // correlation evaluated on a 1/oversample grid before the parabola fit
};

/// Cross-correlation ToF estimate. The guard of every symbol is dropped, the per-symbol
/// cross spectra Y(k) X*(k) are summed and the band-limited correlation is searched
/// over the lag window. Returns seconds.
double estimate_tof(std::span<const double> rx, std::span<const double> ref, double rate, Interpolation interp,
                    const TofOptions& opt);

/// Delays every symbol of a frame by `delay_samples` (fractional allowed) as a cyclic
/// shift of its core, then rebuilds the cyclic prefix.
std::vector<double> delay_frame(std::span<const double> frame, const FrameLayout& layout, double delay_samples);

/// 64-bit stream seed for (campaign seed, sweep point, trial, purpose).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t point, std::uint64_t trial, std::uint64_t purpose);

struct McCampaign {
  int trials = 1000;
  std::uint64_t seed = 1;
  double true_tof = 0.0;                    // s, within [0, T_g)
  std::vector<double> ns_sweep_dbhz;        // sensing noise PSD levels; empty means the model's N_s
  Interpolation interpolation = Interpolation::Parabolic;
  int oversample = 16;
  bool turbulence = false;
  int workers = 1;
};

struct CrbPoint {
  double ns_dbhz = 0.0;
  double snr_db = 0.0;  // received per-sample SNR of the unclipped signal
  int trials = 0;
  double rmse_m = 0.0;
  double crb_m = 0.0;
  double ratio = 0.0;
  double mean_error_m = 0.0;
  bool low_trials = false;
};

/// Thermal noise variance per real sample for PSD N_s over bandwidth B: N_s B / 2.
double sensing_noise_variance(double N_s, const OfdmConfig& cfg);

std::vector<CrbPoint> rmse_vs_crb(const McCampaign& campaign, const SystemModel& model, double b,
                                  std::span<const double> p_norm);

struct ClipCheck {
  std::string quantity;
  double analytic = 0.0;
  double empirical = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool absolute = false;  // tolerance applies to abs_error instead of rel_error
  bool pass = false;
};

struct ClippingReport {
  double bias = 0.0;
  double sigma_x = 0.0;
  std::size_t samples = 0;
  bool vanishing = false;
  std::vector<ClipCheck> checks;

  bool all_pass() const;
  const ClipCheck* find(const std::string& quantity) const;
};

struct ClipVerifyOptions {
  std::size_t samples = 1000000;  // core samples; rounded up to whole frames
  std::uint64_t seed = 1;
  int max_lag = 32;
  int smoothing = 9;  // PSD bins averaged by a centred circular window
  int workers = 1;
};

/// Empirical K, E(w_p), E(w_p^2), R_wp(0..max_lag) and a Bartlett PSD against the analytic model.
ClippingReport verify_clipping_model(const OfdmConfig& cfg, double b, std::span<const double> p_norm,
                                     const ClipVerifyOptions& opt);

}  // namespace fsoisac
