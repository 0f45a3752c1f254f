#pragma once

#include "fsoisac/allocator.hpp"
#include "fsoisac/mc_harness.hpp"
#include "fsoisac/scenario_io.hpp"

#include <string>
#include <vector>

namespace fsoisac {

enum ExitCode : int {
  kExitOk = 0,
  kExitSchema = 1,
  kExitInfeasible = 2,
  kExitDivergence = 3,
  kExitVerifyFailed = 4,
};

int exit_code_for(SolveStatus s);

/// `name=start:stop:step` (inclusive, step may be negative) or `name=v1,v2,...`; an empty
/// list after '=' gives no points.
struct SweepSpec {
  std::string variable;
  std::vector<double> values;
};

SweepSpec parse_sweep_spec(const std::string& text);

/// Names accepted by apply_sweep_value: precision_cm, C0_bpshz, N_c_dbhz, N_s_dbhz, noise_dbhz (both), p_max.
Scenario apply_sweep_value(const Scenario& base, const std::string& variable, double value);

struct SweepRow {
  std::string variable;
  double value = 0.0;
  bool ok = false;
  std::string error;
  AllocationSolution solution;
  int max_dual_iterations = 0;
};

/// One solver per point on a pool of `workers` threads; rows come back in sweep order.
std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& sweep, int workers);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct VerifyResult {
  AllocationSolution solution;
  std::vector<ClippingReport> clipping;
  std::vector<CrbPoint> crb;
  bool crb_checked = false;
  bool crb_pass = true;
  bool pass = false;
};

/// Solves the scenario, checks the clipping model at the solved allocation for the solved
/// bias and for each mc.clip_bias_sigma multiple of sigma_x, then runs the ToF campaign.
/// The RMSE/CRB window [1.0, 1.3] is enforced at the highest-SNR point when trials >= 1000.
VerifyResult run_verify(const Scenario& s, int workers);

inline constexpr double kCrbRatioLow = 1.0;
inline constexpr double kCrbRatioHigh = 1.3;

}  // namespace fsoisac
