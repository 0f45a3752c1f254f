#include "fsoisac/experiments.hpp"
#include "fsoisac/scenario_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace fsoisac;

namespace {

struct CommonArgs {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--scenario", args.scenario, "scenario JSON file")->required();
  cmd->add_option("--out", args.out, "output directory (default: $FSOISAC_OUT_DIR, else ./out)");
  cmd->add_option("--seed", args.seed, "overrides mc.seed")->each([&](const std::string&) { args.seed_given = true; });
  cmd->add_option("--workers", args.workers, "worker threads")->check(CLI::Range(1, 256));
}

fs::path output_dir(const CommonArgs& args) {
  if (!args.out.empty()) return args.out;
  if (const char* env = std::getenv("FSOISAC_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

Scenario load(const CommonArgs& args) {
  Scenario s = load_scenario(args.scenario);
  if (args.seed_given) s.mc.seed = args.seed;
  return s;
}

int run_solve(const CommonArgs& args) {
  const Scenario s = load(args);
  const SystemModel model = build_model(s);
  for (const auto& w : model.channel.warnings) std::cerr << "warning: " << w << "\n";
  const AllocationSolution sol = solve(s.problem, model);
  const fs::path dir = output_dir(args);
  fs::create_directories(dir);
  write_text_file(dir / "solution.json", solution_json(s, sol));
  write_text_file(dir / "allocation.csv", allocation_csv(sol));
  std::cout << "status=" << to_string(sol.status) << " case=" << to_string(sol.case_tag)
            << " b=" << format_number(sol.b_opt) << " C=" << format_number(sol.metrics.C)
            << " precision_m=" << format_number(sol.metrics.crb_distance) << " iterations=" << sol.iterations << "\n";
  return exit_code_for(sol.status);
}

int run_sweep_cmd(const CommonArgs& args, const std::string& sweep_text) {
  const Scenario s = load(args);
  SweepSpec spec;
  try {
    spec = parse_sweep_spec(sweep_text);
    if (!spec.values.empty()) apply_sweep_value(s, spec.variable, spec.values.front());
  } catch (const std::invalid_argument& e) {
    std::cerr << "--sweep: " << e.what() << "\n";
    return kExitSchema;
  }
  const auto rows = run_sweep(s, spec, args.workers);
  const fs::path dir = output_dir(args);
  fs::create_directories(dir);
  write_text_file(dir / "sweep.csv", sweep_csv(rows));
  std::cout << "points=" << rows.size() << "\n";
  return kExitOk;
}

int run_verify_cmd(const CommonArgs& args) {
  const Scenario s = load(args);
  if (!s.mc.present) {
    std::cerr << s.source << ":1: verify needs an 'mc' section\n";
    return kExitSchema;
  }
  const VerifyResult res = run_verify(s, args.workers);
  const fs::path dir = output_dir(args);
  fs::create_directories(dir);
  write_text_file(dir / "clipping_report.csv", clipping_report_csv(res.clipping));
  write_text_file(dir / "crb_report.csv", crb_report_csv(res.crb));
  for (const auto& r : res.clipping) {
    for (const auto& c : r.checks) {
      if (!c.pass) std::cerr << "clipping check failed: b=" << format_number(r.bias) << " " << c.quantity << "\n";
    }
  }
  for (const auto& p : res.crb) {
    std::cout << "snr_db=" << format_number(p.snr_db) << " rmse_m=" << format_number(p.rmse_m)
              << " crb_m=" << format_number(p.crb_m) << " ratio=" << format_number(p.ratio)
              << (p.low_trials ? " (few trials, wide confidence interval)" : "") << "\n";
  }
  if (!res.crb_checked) std::cout << "RMSE/CRB window not enforced (needs >= 1000 trials)\n";
  return res.pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCO-OFDM FSO-ISAC power allocation and verification"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  CommonArgs sweep_args;
  CommonArgs verify_args;
  std::string sweep_text;

  auto* solve_cmd = app.add_subcommand("solve", "solve the scenario's allocation problem");
  add_common(solve_cmd, solve_args);
  auto* sweep_cmd = app.add_subcommand("sweep", "solve over a parameter sweep");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--sweep", sweep_text, "name=start:stop:step or name=v1,v2,...")->required();
  auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo checks of the clipping model and the CRB");
  add_common(verify_cmd, verify_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);
    if (*sweep_cmd) return run_sweep_cmd(sweep_args, sweep_text);
    if (*verify_cmd) return run_verify_cmd(verify_args);
  } catch (const SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  }
  return kExitSchema;
}
