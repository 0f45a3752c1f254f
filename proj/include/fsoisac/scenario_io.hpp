#pragma once

#include "fsoisac/allocator.hpp"
#include "fsoisac/channel.hpp"
#include "fsoisac/mc_harness.hpp"
#include "fsoisac/ofdm_config.hpp"
#include "fsoisac/system_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsoisac {

/// Raised for any scenario-file problem; the message starts with "<file>:<line>: ".
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelSection {
  double L_m = 200.0;
  double lambda_nm = 905.0;
  double atten_db_per_km = -12.8;
  double Cn2 = 5e-14;
  double theta_mrad = 0.5;
  double A_cm2 = 10.0;
  double reflectivity = 0.5;
  double G_T = 1.0;
  double G_R = 10.0;
  std::optional<double> override_gain_c_db;
  std::optional<double> override_gain_s_db;
};

struct NoiseSection {
  double N_c_dbhz = -100.0;
  double N_s_dbhz = -100.0;
  GainMoment gain_moment = GainMoment::SquareOfMean;
};

struct McSection {
  bool present = false;
  int trials = 1000;
  std::uint64_t seed = 1;
  std::optional<double> tof_s;
  std::vector<double> ns_sweep_dbhz;
  Interpolation interpolation = Interpolation::Parabolic;
  int oversample = 16;
  std::size_t clip_samples = 1000000;
  std::vector<double> clip_bias_sigma{0.0, 0.5, 1.0, 1.5};
};

struct Scenario {
  std::string source;  // file name used in messages
  OfdmConfig ofdm;
  ChannelSection channel;
  NoiseSection noise;
  ProblemSpec problem;
  McSection mc;
};

Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

LinkParams comm_link(const Scenario& s);
LinkParams sensing_link(const Scenario& s);

/// Stationary gains from the link budget, replaced by the override gains when given.
SystemModel build_model(const Scenario& s);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_number(double v);

std::string allocation_csv(const AllocationSolution& sol);
std::string solution_json(const Scenario& s, const AllocationSolution& sol);
std::string clipping_report_csv(const std::vector<ClippingReport>& reports);
std::string crb_report_csv(const std::vector<CrbPoint>& points);

/// Writes through a temporary file in the same directory, then renames.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fsoisac
