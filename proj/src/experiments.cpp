#include "fsoisac/experiments.hpp"

#include "fsoisac/signal.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fsoisac {
namespace {

double parse_double(const std::string& token, const std::string& whole) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) throw std::invalid_argument("bad number '" + token + "' in sweep '" + whole + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Removes the float noise of start + i * step.
double tidy(double v) {
  if (v == 0.0) return 0.0;
  const double scale = std::pow(10.0, 12 - static_cast<int>(std::ceil(std::log10(std::abs(v)))));
  return std::round(v * scale) / scale;
}

}  // namespace

int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return kExitOk;
    case SolveStatus::Infeasible: return kExitInfeasible;
    case SolveStatus::DivergenceAborted: return kExitDivergence;
  }
  return kExitDivergence;
}

SweepSpec parse_sweep_spec(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep must look like name=start:stop:step or name=v1,v2");
  SweepSpec spec;
  spec.variable = text.substr(0, eq);
  const std::string rhs = text.substr(eq + 1);
  if (rhs.find_first_not_of(' ') == std::string::npos) return spec;
  if (rhs.find(':') != std::string::npos) {
    const auto parts = split(rhs, ':');
    if (parts.size() != 3) throw std::invalid_argument("range sweep needs start:stop:step");
    const double start = parse_double(parts[0], text);
    const double stop = parse_double(parts[1], text);
    const double step = parse_double(parts[2], text);
    if (step == 0.0 || (stop - start) / step < -1e-9) throw std::invalid_argument("sweep step does not reach stop");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw std::invalid_argument("sweep has too many points");
    for (long long i = 0; i < count; ++i) spec.values.push_back(tidy(start + static_cast<double>(i) * step));
  } else {
    for (const auto& tok : split(rhs, ',')) spec.values.push_back(parse_double(tok, text));
  }
  return spec;
}

Scenario apply_sweep_value(const Scenario& base, const std::string& variable, double value) {
  Scenario s = base;
  if (variable == "precision_cm") {
    s.problem.mode = Mode::CommCentric;
    s.problem.precision_m = value / 100.0;
  } else if (variable == "C0_bpshz") {
    s.problem.mode = Mode::SensingCentric;
    s.problem.C0_bpshz = value;
  } else if (variable == "N_c_dbhz") {
    s.noise.N_c_dbhz = value;
  } else if (variable == "N_s_dbhz") {
    s.noise.N_s_dbhz = value;
  } else if (variable == "noise_dbhz") {
    s.noise.N_c_dbhz = value;
    s.noise.N_s_dbhz = value;
  } else if (variable == "p_max") {
    s.problem.p_max = value;
  } else {
    throw std::invalid_argument("unknown sweep variable '" + variable + "'");
  }
  return s;
}

std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& sweep, int workers) {
  // Reject unknown names before any work starts.
  if (!sweep.values.empty()) apply_sweep_value(base, sweep.variable, sweep.values.front());
  std::vector<SweepRow> rows(sweep.values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      row.variable = sweep.variable;
      row.value = sweep.values[i];
      try {
        const Scenario s = apply_sweep_value(base, sweep.variable, row.value);
        const SystemModel model = build_model(s);
        row.solution = solve(s.problem, model);
        row.ok = true;
        for (const auto& it : row.solution.trace) row.max_dual_iterations = std::max(row.max_dual_iterations, it.dual_iterations);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int threads = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(rows.size(), 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "variable,value,status,case_tag,b,C_bpshz,I_m2,precision_m,bcd_iterations,max_dual_iterations,error\n";
  for (const auto& r : rows) {
    out += r.variable + ',' + format_number(r.value) + ',';
    if (!r.ok) {
      out += "Error,,,,,,,,";
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += msg + '\n';
      continue;
    }
    const auto& s = r.solution;
    out += std::string(to_string(s.status)) + ',' + to_string(s.case_tag) + ',' + format_number(s.b_opt) + ',' +
           format_number(s.metrics.C) + ',' + format_number(s.metrics.I) + ',' + format_number(s.metrics.crb_distance) +
           ',' + std::to_string(s.iterations) + ',' + std::to_string(r.max_dual_iterations) + ",\n";
  }
  return out;
}

VerifyResult run_verify(const Scenario& s, int workers) {
  if (!s.mc.present) throw SchemaError(s.source + ":1: verify needs an 'mc' section");
  VerifyResult out;
  const SystemModel model = build_model(s);
  out.solution = solve(s.problem, model);

  double b = out.solution.b_opt;
  std::vector<double> p = out.solution.p_norm;
  if (out.solution.status != SolveStatus::Converged) {
    b = 0.5 * model.max_bias();
    p = uniform_allocation(s.ofdm);
    out.solution.events.push_back("verification falls back to the uniform allocation at b = sqrt(P)/2");
  }

  ClipVerifyOptions copt;
  copt.samples = s.mc.clip_samples;
  copt.seed = s.mc.seed;
  copt.workers = workers;
  std::vector<double> biases{b};
  for (double mult : s.mc.clip_bias_sigma) {
    // sigma_x depends on b itself; solve b = mult * sqrt((P - b^2)/N) for b.
    const double bb = mult * std::sqrt(s.ofdm.P / (s.ofdm.N + mult * mult));
    if (bb * bb < s.ofdm.P) biases.push_back(bb);
  }
  for (double bb : biases) out.clipping.push_back(verify_clipping_model(s.ofdm, bb, p, copt));

  McCampaign camp;
  camp.trials = s.mc.trials;
  camp.seed = s.mc.seed;
  camp.true_tof = s.mc.tof_s.value_or(0.3137 * s.ofdm.T_g);
  camp.ns_sweep_dbhz = s.mc.ns_sweep_dbhz;
  camp.interpolation = s.mc.interpolation;
  camp.oversample = s.mc.oversample;
  camp.workers = workers;
  out.crb = rmse_vs_crb(camp, model, b, p);

  bool clip_ok = std::all_of(out.clipping.begin(), out.clipping.end(), [](const ClippingReport& r) { return r.all_pass(); });
  if (!out.crb.empty() && s.mc.trials >= 1000) {
    const auto best = std::max_element(out.crb.begin(), out.crb.end(),
                                       [](const CrbPoint& a, const CrbPoint& c) { return a.snr_db < c.snr_db; });
    out.crb_checked = true;
    out.crb_pass = best->ratio >= kCrbRatioLow && best->ratio <= kCrbRatioHigh;
  }
  out.pass = clip_ok && out.crb_pass;
  return out;
}

}  // namespace fsoisac
