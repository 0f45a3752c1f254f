#pragma once

#include "fsoisac/metrics.hpp"
#include "fsoisac/system_model.hpp"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsoisac {

enum class Mode { CommCentric, SensingCentric };

enum class CaseTag { A, B, C, D, E, F, Infeasible };

enum class SolveStatus { Converged, Infeasible, DivergenceAborted };

const char* to_string(Mode m);
const char* to_string(CaseTag c);
const char* to_string(SolveStatus s);

struct ProblemSpec {
  Mode mode = Mode::CommCentric;
  double precision_m = 0.04;  // P1: desired distance precision c / (2 varsigma0); <= 0 disables the constraint
  double C0_bpshz = 0.0;      // P2: spectral-efficiency floor
  double p_max = 0.01;

  /// Normalized thresholds in the units the allocator works in.
  double sensing_threshold(const OfdmConfig& cfg) const;
  double capacity_threshold(const OfdmConfig& cfg) const;

  /// 0 < p_max < 1/2 < (N/2 - 1) p_max.
  void validate(const OfdmConfig& cfg) const;
};

struct DualVariables {
  double mu = 0.0;
  double eta = 0.0;
};

/// Iterates of the alternating dual bisections, j = 0 .. iterations.
/// residual[j] = |mu_j - mu*| / |mu_0 - mu*| + |eta_j - eta*| / |eta_0 - eta*| with the
/// converged pair as (mu*, eta*); a term is dropped when its denominator is zero.
/// step[j-1] is the larger relative move of mu and eta in iteration j.
struct DualTrace {
  std::vector<double> mu;
  std::vector<double> eta;
  std::vector<double> residual;
  std::vector<double> step;
  std::vector<std::string> events;
};

struct DualResult {
  DualVariables duals;
  std::vector<double> p_norm;
  DualTrace trace;
  int iterations = 0;
};

struct WaterfillResult {
  std::vector<double> p_norm;
  double mu = 0.0;
};

class DualIterationError : public std::runtime_error {
 public:
  DualIterationError(const std::string& what, DualTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const DualTrace& trace() const { return trace_; }

 private:
  DualTrace trace_;
};

struct DualOptions {
  double tol_mu = 1e-8;
  double tol_eta = 1e-8;
  int max_iterations = 1000;
};

/// p(k) = {1/xi0 - 1/gamma_c(k)}+ with xi0 = max{mu - eta gamma_s(k) k^2, 1/(p_max + 1/gamma_c(k))}.
std::vector<double> allocate_xi(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu,
                                double eta, double p_max);

/// p(k) = {1/psi0 - 1/gamma_c(k)}+ with psi0 = max{(mu - gamma_s(k) k^2)/eta, 1/(p_max + 1/gamma_c(k))}.
std::vector<double> allocate_psi(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu,
                                 double eta, double p_max);

/// Capped water-filling at fixed eta; mu is bisected until the allocation sums to target_sum.
WaterfillResult waterfill_comm(std::span<const double> gamma_c, std::span<const double> gamma_s, double eta,
                               double target_sum, double p_max);

/// Fills the largest gamma_s(k) k^2 first, p_max per subcarrier, remainder on the boundary rank.
std::vector<double> sensing_lp(std::span<const double> gamma_s, double p_max);

/// Dual variables of the sensing-constrained capacity problem (both constraints active).
DualResult dual_iterate_comm(std::span<const double> gamma_c, std::span<const double> gamma_s, double target_info,
                             double p_max, const DualOptions& opt = {});

/// Dual variables of the capacity-constrained sensing problem; target_cap in nats.
DualResult dual_iterate_sense(std::span<const double> gamma_c, std::span<const double> gamma_s, double target_cap,
                              double p_max, const DualOptions& opt = {});

/// gamma_s(l2) l2^2 eta <= mu <= gamma_s(l1) l1^2 eta + gamma_c(l1), l1 = argmax of the right side.
bool dual_region_holds(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu, double eta);

struct BiasSearchResult {
  double b = 0.0;
  double objective = 0.0;
  int evaluations = 0;
  bool non_unimodal = false;
};

/// Golden-section search over [0, sqrt(P)] to 1e-4 sqrt(P). Falls back to a 64-point scan
/// plus local refinement when the best sample ends up outside the final bracket.
BiasSearchResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol);

BiasSearchResult solve_bias(Mode objective, std::span<const double> p_norm, const SystemModel& model);

struct BcdIteration {
  int index = 0;
  double b = 0.0;
  CaseTag case_tag = CaseTag::A;
  double objective = 0.0;  // C (bps/Hz) for P1, I_tau for P2, after the stats refresh
  double C = 0.0;
  double I_tau = 0.0;
  DualVariables duals;
  int dual_iterations = 0;
  std::vector<double> dual_residuals;
  int bias_evaluations = 0;
  bool non_unimodal = false;
};

struct AllocationSolution {
  SolveStatus status = SolveStatus::Converged;
  CaseTag case_tag = CaseTag::A;
  double b_opt = 0.0;
  std::vector<double> p_norm;
  DualVariables duals;
  MetricReport metrics;
  SnrProfile snr;
  std::vector<BcdIteration> trace;
  std::vector<std::string> events;
  int iterations = 0;
};

struct BcdOptions {
  int max_iterations = 50;
  double rel_tol = 1e-6;
  double divergence_drop = 0.05;  // abort when the objective falls by this fraction of its first value
  DualOptions dual;
  std::optional<double> initial_bias;
  std::vector<double> initial_p;
};

/// Per-iteration subcarrier step with P_wp held at the current stats.
struct SubcarrierStep {
  CaseTag case_tag = CaseTag::A;
  std::vector<double> p_norm;
  DualVariables duals;
  DualTrace dual_trace;
  int dual_iterations = 0;
};

SubcarrierStep subcarrier_step_p1(const SnrProfile& snr, double sensing_threshold, double p_max,
                                  const DualOptions& opt = {});
SubcarrierStep subcarrier_step_p2(const SnrProfile& snr, double capacity_threshold, double p_max,
                                  const DualOptions& opt = {});

AllocationSolution solve_p1(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt = {});
AllocationSolution solve_p2(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt = {});
AllocationSolution solve(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt = {});

}  // namespace fsoisac
