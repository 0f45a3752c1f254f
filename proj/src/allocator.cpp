#include "fsoisac/allocator.hpp"

#include "fsoisac/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace fsoisac {
namespace {

constexpr int kBisectionCap = 200;
constexpr double kBisectionRelWidth = 1e-15;
constexpr double kExpansionFactor = 16.0;
constexpr double kResidualTol = 1e-8;

double weight(std::span<const double> gamma_s, std::size_t i) {
  const double k = static_cast<double>(i + 1);
  return k * k * gamma_s[i];
}

void check_profiles(std::span<const double> gamma_c, std::span<const double> gamma_s) {
  if (gamma_c.size() != gamma_s.size() || gamma_c.empty()) {
    throw std::invalid_argument("allocator: SNR vectors must be non-empty and of equal length");
  }
}

double power_sum(std::span<const double> p) { return std::accumulate(p.begin(), p.end(), 0.0); }

double capped_level(double gamma_c, double p_max) { return 1.0 / (p_max + 1.0 / gamma_c); }

double level_to_power(double level, double gamma_c, double p_max) {
  if (!(gamma_c > 0.0)) return 0.0;
  if (std::isinf(level)) return 0.0;
  const double p = 1.0 / level - 1.0 / gamma_c;
  return std::clamp(p, 0.0, p_max);
}

struct Bracket {
  double lo;
  double hi;
};

// Root of f(x) = target for monotone f on [lo, hi]. `increasing` gives the direction.
// The upper end is widened once when the bracket does not straddle the target.
double bisect(const std::function<double(double)>& f, Bracket br, double target, bool increasing,
              const char* label, DualTrace& trace) {
  auto below = [&](double v) { return increasing ? v < target : v > target; };
  double flo = f(br.lo);
  double fhi = f(br.hi);
  if (!below(flo)) return br.lo;
  if (below(fhi)) {
    const double width = std::max(br.hi - br.lo, std::max(std::abs(br.hi), 1.0));
    br.hi = br.lo + kExpansionFactor * width;
    fhi = f(br.hi);
    std::ostringstream os;
    os << label << " bracket expanded to [" << br.lo << ", " << br.hi << "]";
    trace.events.push_back(os.str());
    if (below(fhi)) throw DualIterationError(std::string(label) + ": bracketing failed after expansion", trace);
  }
  double lo = br.lo;
  double hi = br.hi;
  for (int it = 0; it < kBisectionCap; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (below(f(mid))) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= kBisectionRelWidth * std::max(std::abs(hi), std::numeric_limits<double>::min())) break;
  }
  return hi;
}

double rel_move(double now, double before) {
  const double diff = std::abs(now - before);
  if (diff == 0.0) return 0.0;
  return diff / std::max(std::abs(now), std::abs(before));
}

void fill_residuals(DualTrace& tr) {
  const double mu_star = tr.mu.back();
  const double eta_star = tr.eta.back();
  const double mu0 = std::abs(tr.mu.front() - mu_star);
  const double eta0 = std::abs(tr.eta.front() - eta_star);
  tr.residual.clear();
  for (std::size_t j = 0; j < tr.mu.size(); ++j) {
    double r = 0.0;
    if (mu0 > 0.0) r += std::abs(tr.mu[j] - mu_star) / mu0;
    if (eta0 > 0.0) r += std::abs(tr.eta[j] - eta_star) / eta0;
    tr.residual.push_back(r);
  }
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::CommCentric ? "CommCentric" : "SensingCentric"; }

const char* to_string(CaseTag c) {
  switch (c) {
    case CaseTag::A: return "A";
    case CaseTag::B: return "B";
    case CaseTag::C: return "C";
    case CaseTag::D: return "D";
    case CaseTag::E: return "E";
    case CaseTag::F: return "F";
    case CaseTag::Infeasible: return "Infeasible";
  }
  return "?";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::DivergenceAborted: return "DivergenceAborted";
  }
  return "?";
}

double ProblemSpec::sensing_threshold(const OfdmConfig& cfg) const {
  if (!(precision_m > 0.0)) return 0.0;
  return normalized_sensing_threshold(precision_m, cfg);
}

double ProblemSpec::capacity_threshold(const OfdmConfig& cfg) const {
  return normalized_capacity_threshold(C0_bpshz, cfg);
}

void ProblemSpec::validate(const OfdmConfig& cfg) const {
  const double slots = static_cast<double>(cfg.data_subcarriers());
  if (!(p_max > 0.0) || !(p_max < 0.5) || !(slots * p_max > 0.5)) {
    throw std::invalid_argument("p_max must satisfy 0 < p_max < 1/2 < (N/2-1) p_max");
  }
  if (mode == Mode::SensingCentric && !(C0_bpshz >= 0.0)) throw std::invalid_argument("C0 must be non-negative");
}

std::vector<double> allocate_xi(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu,
                                double eta, double p_max) {
  check_profiles(gamma_c, gamma_s);
  std::vector<double> p(gamma_c.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(gamma_c[i] > 0.0)) {
      p[i] = 0.0;
      continue;
    }
    const double level = std::max(mu - eta * weight(gamma_s, i), capped_level(gamma_c[i], p_max));
    p[i] = level_to_power(level, gamma_c[i], p_max);
  }
  return p;
}

std::vector<double> allocate_psi(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu,
                                 double eta, double p_max) {
  check_profiles(gamma_c, gamma_s);
  std::vector<double> p(gamma_c.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(gamma_c[i] > 0.0)) {
      p[i] = 0.0;
      continue;
    }
    const double gap = mu - weight(gamma_s, i);
    const double cap = capped_level(gamma_c[i], p_max);
    double level;
    if (eta > 0.0) {
      level = std::max(gap / eta, cap);
    } else {
      level = gap > 0.0 ? std::numeric_limits<double>::infinity() : cap;
    }
    p[i] = level_to_power(level, gamma_c[i], p_max);
  }
  return p;
}

WaterfillResult waterfill_comm(std::span<const double> gamma_c, std::span<const double> gamma_s, double eta,
                               double target_sum, double p_max) {
  check_profiles(gamma_c, gamma_s);
  if (!(eta >= 0.0)) throw std::invalid_argument("waterfill_comm: eta must be non-negative");
  if (!(p_max * static_cast<double>(gamma_c.size()) >= target_sum)) {
    throw std::invalid_argument("waterfill_comm: target exceeds the total cap");
  }
  double hi = 0.0;
  for (std::size_t i = 0; i < gamma_c.size(); ++i) hi = std::max(hi, eta * weight(gamma_s, i) + gamma_c[i]);
  DualTrace scratch;
  auto xi1 = [&](double mu) { return power_sum(allocate_xi(gamma_c, gamma_s, mu, eta, p_max)); };
  WaterfillResult out;
  out.mu = bisect(xi1, {0.0, hi}, target_sum, false, "waterfill mu", scratch);
  out.p_norm = allocate_xi(gamma_c, gamma_s, out.mu, eta, p_max);
  return out;
}

std::vector<double> sensing_lp(std::span<const double> gamma_s, double p_max) {
  const std::size_t n = gamma_s.size();
  const double half_n = static_cast<double>(n + 1);  // N/2
  if (!(p_max > 0.0) || !(p_max < 0.5) || !(static_cast<double>(n) * p_max > 0.5)) {
    throw std::invalid_argument("sensing_lp: p_max outside (0, 1/2) or total cap below 1/2");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weight(gamma_s, a) < weight(gamma_s, b); });

  const auto l_m = static_cast<std::size_t>(std::floor(half_n - 1.0 / (2.0 * p_max) + 1e-9));
  std::vector<double> p(n, 0.0);
  const double full = static_cast<double>(n - l_m);
  for (std::size_t rank = l_m + 1; rank <= n; ++rank) p[order[rank - 1]] = p_max;
  if (l_m >= 1) p[order[l_m - 1]] = std::max(0.5 - full * p_max, 0.0);
  return p;
}

DualResult dual_iterate_comm(std::span<const double> gamma_c, std::span<const double> gamma_s, double target_info,
                             double p_max, const DualOptions& opt) {
  check_profiles(gamma_c, gamma_s);
  DualResult res;
  DualTrace& tr = res.trace;
  double mu = 0.0;
  double eta = 0.0;
  tr.mu.push_back(mu);
  tr.eta.push_back(eta);

  auto xi1 = [&](double m, double e) { return power_sum(allocate_xi(gamma_c, gamma_s, m, e, p_max)); };
  auto xi2 = [&](double m, double e) { return weighted_sensing_sum(gamma_s, allocate_xi(gamma_c, gamma_s, m, e, p_max)); };

  bool converged = false;
  for (int j = 0; j < opt.max_iterations; ++j) {
    double mu_hi = 0.0;
    for (std::size_t l = 0; l < gamma_c.size(); ++l) mu_hi = std::max(mu_hi, weight(gamma_s, l) * eta + gamma_c[l]);
    const double mu_next = bisect([&](double m) { return xi1(m, eta); }, {mu, std::max(mu_hi, mu)}, 0.5, false,
                                  "comm mu", tr);

    double eta_hi = eta;
    for (std::size_t l = 0; l < gamma_s.size(); ++l) {
      const double w = weight(gamma_s, l);
      if (w > 0.0) eta_hi = std::max(eta_hi, mu_next / w);
    }
    const double eta_next = bisect([&](double e) { return xi2(mu_next, e); }, {eta, eta_hi}, target_info, true,
                                   "comm eta", tr);

    const double dmu = rel_move(mu_next, mu);
    const double deta = rel_move(eta_next, eta);
    mu = mu_next;
    eta = eta_next;
    tr.mu.push_back(mu);
    tr.eta.push_back(eta);
    tr.step.push_back(std::max(dmu, deta));
    res.iterations = j + 1;
    // Step (ii) leaves the metric equation exact, so only the power equation can lag.
    const double power_gap = std::abs(xi1(mu, eta) - 0.5) / 0.5;
    if (dmu <= opt.tol_mu && deta <= opt.tol_eta && power_gap < kResidualTol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw DualIterationError("dual_iterate_comm: iteration cap exceeded", tr);
  fill_residuals(tr);

  // Final mu re-solve so the power constraint holds to bisection precision.
  double mu_hi = 0.0;
  for (std::size_t l = 0; l < gamma_c.size(); ++l) mu_hi = std::max(mu_hi, weight(gamma_s, l) * eta + gamma_c[l]);
  mu = bisect([&](double m) { return xi1(m, eta); }, {0.0, mu_hi}, 0.5, false, "comm mu", tr);
  res.duals = {mu, eta};
  res.p_norm = allocate_xi(gamma_c, gamma_s, mu, eta, p_max);
  return res;
}

DualResult dual_iterate_sense(std::span<const double> gamma_c, std::span<const double> gamma_s, double target_cap,
                              double p_max, const DualOptions& opt) {
  check_profiles(gamma_c, gamma_s);
  DualResult res;
  DualTrace& tr = res.trace;
  double mu = 0.0;
  double eta = 0.0;
  tr.mu.push_back(mu);
  tr.eta.push_back(eta);

  auto xi1 = [&](double m, double e) { return power_sum(allocate_psi(gamma_c, gamma_s, m, e, p_max)); };
  auto xi2 = [&](double m, double e) { return log_capacity_sum(gamma_c, allocate_psi(gamma_c, gamma_s, m, e, p_max)); };
  auto mu_upper = [&](double e) {
    double hi = 0.0;
    for (std::size_t l = 0; l < gamma_c.size(); ++l) hi = std::max(hi, weight(gamma_s, l) + gamma_c[l] * e);
    return hi;
  };

  bool converged = false;
  for (int j = 0; j < opt.max_iterations; ++j) {
    const double mu_next = bisect([&](double m) { return xi1(m, eta); }, {mu, std::max(mu_upper(eta), mu)}, 0.5,
                                  false, "sense mu", tr);

    double eta_hi = eta;
    for (std::size_t l = 0; l < gamma_c.size(); ++l) {
      if (gamma_c[l] > 0.0) eta_hi = std::max(eta_hi, (p_max + 1.0 / gamma_c[l]) * (mu_next - weight(gamma_s, l)));
    }
    const double eta_next = bisect([&](double e) { return xi2(mu_next, e); }, {eta, eta_hi}, target_cap, true,
                                   "sense eta", tr);

    const double dmu = rel_move(mu_next, mu);
    const double deta = rel_move(eta_next, eta);
    mu = mu_next;
    eta = eta_next;
    tr.mu.push_back(mu);
    tr.eta.push_back(eta);
    tr.step.push_back(std::max(dmu, deta));
    res.iterations = j + 1;
    // Step (ii) leaves the metric equation exact, so only the power equation can lag.
    const double power_gap = std::abs(xi1(mu, eta) - 0.5) / 0.5;
    if (dmu <= opt.tol_mu && deta <= opt.tol_eta && power_gap < kResidualTol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw DualIterationError("dual_iterate_sense: iteration cap exceeded", tr);
  fill_residuals(tr);

  mu = bisect([&](double m) { return xi1(m, eta); }, {0.0, mu_upper(eta)}, 0.5, false, "sense mu", tr);
  res.duals = {mu, eta};
  res.p_norm = allocate_psi(gamma_c, gamma_s, mu, eta, p_max);
  return res;
}

bool dual_region_holds(std::span<const double> gamma_c, std::span<const double> gamma_s, double mu, double eta) {
  check_profiles(gamma_c, gamma_s);
  double w_min = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < gamma_c.size(); ++l) {
    w_min = std::min(w_min, weight(gamma_s, l));
    upper = std::max(upper, weight(gamma_s, l) * eta + gamma_c[l]);
  }
  const double slack = 1e-12 * std::max(1.0, std::abs(upper));
  return w_min * eta <= mu + slack && mu <= upper + slack;
}

BiasSearchResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  BiasSearchResult out;
  double best_x = lo;
  double best_f = -std::numeric_limits<double>::infinity();
  auto eval = [&](double x) {
    const double v = f(x);
    ++out.evaluations;
    if (v > best_f) {
      best_f = v;
      best_x = x;
    }
    return v;
  };

  auto search = [&](double a, double b) {
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = eval(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = eval(d);
      }
    }
    return Bracket{a, b};
  };

  eval(lo);
  eval(hi);
  Bracket br = search(lo, hi);
  if (best_x < br.lo - tol || best_x > br.hi + tol) {
    out.non_unimodal = true;
    constexpr int kGrid = 64;
    const double step = (hi - lo) / (kGrid - 1);
    for (int i = 0; i < kGrid; ++i) eval(lo + step * i);
    const double centre = best_x;
    search(std::max(lo, centre - step), std::min(hi, centre + step));
  }
  out.b = best_x;
  out.objective = best_f;
  return out;
}

BiasSearchResult solve_bias(Mode objective, std::span<const double> p_norm, const SystemModel& model) {
  validate_allocation(model.cfg, p_norm);
  const double b_max = model.max_bias();
  auto f = [&](double b) {
    const auto m = model.metrics(b, p_norm);
    return objective == Mode::CommCentric ? m.C : m.I_tau;
  };
  return golden_section_max(f, 0.0, b_max, 1e-4 * b_max);
}

SubcarrierStep subcarrier_step_p1(const SnrProfile& snr, double sensing_threshold, double p_max,
                                  const DualOptions& opt) {
  SubcarrierStep step;
  auto wf = waterfill_comm(snr.gamma_c, snr.gamma_s, 0.0, 0.5, p_max);
  if (sensing_threshold <= 0.0 || weighted_sensing_sum(snr.gamma_s, wf.p_norm) >= sensing_threshold) {
    step.case_tag = CaseTag::A;
    step.p_norm = std::move(wf.p_norm);
    step.duals = {wf.mu, 0.0};
    return step;
  }
  auto lp = sensing_lp(snr.gamma_s, p_max);
  if (weighted_sensing_sum(snr.gamma_s, lp) < sensing_threshold) {
    step.case_tag = CaseTag::Infeasible;
    step.p_norm = std::move(lp);
    return step;
  }
  auto dual = dual_iterate_comm(snr.gamma_c, snr.gamma_s, sensing_threshold, p_max, opt);
  step.case_tag = CaseTag::C;
  step.p_norm = std::move(dual.p_norm);
  step.duals = dual.duals;
  step.dual_trace = std::move(dual.trace);
  step.dual_iterations = dual.iterations;
  return step;
}

SubcarrierStep subcarrier_step_p2(const SnrProfile& snr, double capacity_threshold, double p_max,
                                  const DualOptions& opt) {
  SubcarrierStep step;
  auto lp = sensing_lp(snr.gamma_s, p_max);
  if (capacity_threshold <= 0.0 || log_capacity_sum(snr.gamma_c, lp) >= capacity_threshold) {
    step.case_tag = CaseTag::D;
    step.p_norm = std::move(lp);
    return step;
  }
  auto wf = waterfill_comm(snr.gamma_c, snr.gamma_s, 0.0, 0.5, p_max);
  if (log_capacity_sum(snr.gamma_c, wf.p_norm) < capacity_threshold) {
    step.case_tag = CaseTag::Infeasible;
    step.p_norm = std::move(wf.p_norm);
    return step;
  }
  auto dual = dual_iterate_sense(snr.gamma_c, snr.gamma_s, capacity_threshold, p_max, opt);
  step.case_tag = CaseTag::F;
  step.p_norm = std::move(dual.p_norm);
  step.duals = dual.duals;
  step.dual_trace = std::move(dual.trace);
  step.dual_iterations = dual.iterations;
  return step;
}

namespace {

AllocationSolution run_bcd(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt) {
  const OfdmConfig& cfg = model.cfg;
  spec.validate(cfg);
  const bool comm = spec.mode == Mode::CommCentric;
  const double threshold = comm ? spec.sensing_threshold(cfg) : spec.capacity_threshold(cfg);

  AllocationSolution sol;
  double b = opt.initial_bias.value_or(0.5 * model.max_bias());
  std::vector<double> p = opt.initial_p.empty() ? uniform_allocation(cfg) : opt.initial_p;
  validate_allocation(cfg, p);

  auto finish = [&](SolveStatus status) {
    sol.status = status;
    sol.b_opt = b;
    sol.p_norm = p;
    sol.iterations = static_cast<int>(sol.trace.size());
    if (cfg.P - b * b > 0.0) {
      sol.snr = model.snr(b, p);
      sol.metrics = evaluate_metrics(sol.snr, p, cfg);
    }
    return sol;
  };

  double first = std::numeric_limits<double>::quiet_NaN();
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int i = 1; i <= opt.max_iterations; ++i) {
    const auto bias = solve_bias(spec.mode, p, model);
    b = bias.b;
    if (bias.non_unimodal) sol.events.push_back("iteration " + std::to_string(i) + ": bias objective not unimodal, grid fallback used");
    if (!(cfg.P - b * b > 0.0)) {
      sol.events.push_back("bias search returned b = sqrt(P)");
      return finish(SolveStatus::DivergenceAborted);
    }

    const auto frozen = model.snr(b, p);
    SubcarrierStep step;
    try {
      step = comm ? subcarrier_step_p1(frozen, threshold, spec.p_max, opt.dual)
                  : subcarrier_step_p2(frozen, threshold, spec.p_max, opt.dual);
    } catch (const DualIterationError& e) {
      sol.events.push_back(std::string("iteration ") + std::to_string(i) + ": " + e.what());
      for (const auto& ev : e.trace().events) sol.events.push_back(ev);
      return finish(SolveStatus::DivergenceAborted);
    }
    for (const auto& ev : step.dual_trace.events) sol.events.push_back("iteration " + std::to_string(i) + ": " + ev);

    BcdIteration it;
    it.index = i;
    it.b = b;
    it.case_tag = step.case_tag;
    it.duals = step.duals;
    it.dual_iterations = step.dual_iterations;
    it.dual_residuals = step.dual_trace.residual;
    it.bias_evaluations = bias.evaluations;
    it.non_unimodal = bias.non_unimodal;

    sol.case_tag = step.case_tag;
    sol.duals = step.duals;
    if (step.case_tag == CaseTag::Infeasible) {
      p = std::move(step.p_norm);
      const auto m = model.metrics(b, p);
      it.C = m.C;
      it.I_tau = m.I_tau;
      it.objective = comm ? m.C : m.I_tau;
      sol.trace.push_back(std::move(it));
      return finish(SolveStatus::Infeasible);
    }

    p = std::move(step.p_norm);
    const auto m = model.metrics(b, p);
    it.C = m.C;
    it.I_tau = m.I_tau;
    it.objective = comm ? m.C : m.I_tau;
    const double obj = it.objective;
    sol.trace.push_back(std::move(it));

    if (!std::isfinite(obj)) {
      sol.events.push_back("non-finite objective at iteration " + std::to_string(i));
      return finish(SolveStatus::DivergenceAborted);
    }
    if (i == 1) {
      first = obj;
    } else {
      if (obj < prev - opt.divergence_drop * std::abs(first)) {
        sol.events.push_back("objective dropped at iteration " + std::to_string(i));
        return finish(SolveStatus::DivergenceAborted);
      }
      if (std::abs(obj - prev) < opt.rel_tol * std::abs(first)) return finish(SolveStatus::Converged);
    }
    prev = obj;
  }
  sol.events.push_back("iteration cap reached");
  return finish(SolveStatus::DivergenceAborted);
}

}  // namespace

AllocationSolution solve_p1(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt) {
  if (spec.mode != Mode::CommCentric) throw std::invalid_argument("solve_p1 requires CommCentric mode");
  return run_bcd(spec, model, opt);
}

AllocationSolution solve_p2(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt) {
  if (spec.mode != Mode::SensingCentric) throw std::invalid_argument("solve_p2 requires SensingCentric mode");
  return run_bcd(spec, model, opt);
}

AllocationSolution solve(const ProblemSpec& spec, const SystemModel& model, const BcdOptions& opt) {
  return spec.mode == Mode::CommCentric ? solve_p1(spec, model, opt) : solve_p2(spec, model, opt);
}

}  // namespace fsoisac
