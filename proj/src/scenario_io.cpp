#include "fsoisac/scenario_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fsoisac {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  int line_at(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  }

  // Line of the first `"key"` at or after `from`; falls back to `from`'s line.
  int line_of(const std::string& key, std::size_t from = 0) const {
    const auto pos = text_.find('"' + key + '"', from);
    return line_at(pos == std::string::npos ? from : pos);
  }

  std::size_t offset_of(const std::string& key, std::size_t from = 0) const {
    const auto pos = text_.find('"' + key + '"', from);
    return pos == std::string::npos ? from : pos;
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw SchemaError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  const std::string& text_;
  std::string source_;
};

class Section {
 public:
  Section(const Reader& rd, const json& obj, std::string name, std::size_t offset)
      : rd_(rd), obj_(obj), name_(std::move(name)), offset_(offset) {
    if (!obj_.is_object()) rd_.fail(rd_.line_at(offset_), "section '" + name_ + "' must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!ok.contains(it.key())) rd_.fail(rd_.line_of(it.key(), offset_), "unknown key '" + name_ + "." + it.key() + "'");
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  double number(const char* key) const {
    const auto& v = get(key);
    if (!v.is_number()) fail_at(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail_at(key, "must be finite");
    return d;
  }

  double positive(const char* key) const {
    const double d = number(key);
    if (!(d > 0.0)) fail_at(key, "must be positive");
    return d;
  }

  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  long long integer(const char* key) const {
    const auto& v = get(key);
    if (!v.is_number_integer()) fail_at(key, "must be an integer");
    return v.get<long long>();
  }

  std::uint64_t unsigned_integer(const char* key) const {
    const auto& v = get(key);
    if (!v.is_number_unsigned()) fail_at(key, "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const char* key) const {
    const auto& v = get(key);
    if (!v.is_string()) fail_at(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    const auto& v = get(key);
    if (!v.is_array()) fail_at(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail_at(key, "must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  [[noreturn]] void fail_at(const char* key, const std::string& msg) const {
    rd_.fail(rd_.line_of(key, offset_), "'" + name_ + "." + key + "' " + msg);
  }

 private:
  const json& get(const char* key) const {
    if (!obj_.contains(key)) rd_.fail(rd_.line_at(offset_), "missing key '" + name_ + "." + key + "'");
    return obj_.at(key);
  }

  const Reader& rd_;
  const json& obj_;
  std::string name_;
  std::size_t offset_;
};

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  Reader rd(text, source);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    rd.fail(rd.line_at(e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) rd.fail(1, "top level must be an object");

  const std::set<std::string> sections{"ofdm", "channel", "noise", "problem", "mc"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!sections.contains(it.key())) rd.fail(rd.line_of(it.key()), "unknown key '" + it.key() + "'");
  }
  for (const char* req : {"ofdm", "channel", "noise", "problem"}) {
    if (!doc.contains(req)) rd.fail(1, std::string("missing section '") + req + "'");
  }

  Scenario s;
  s.source = source;

  {
    const Section sec(rd, doc["ofdm"], "ofdm", rd.offset_of("ofdm"));
    sec.allow({"M", "N", "delta_f_hz", "T_g_s", "P_w"});
    s.ofdm.M = static_cast<int>(sec.integer("M"));
    s.ofdm.N = static_cast<int>(sec.integer("N"));
    s.ofdm.delta_f = sec.positive("delta_f_hz");
    s.ofdm.T_g = sec.number("T_g_s");
    s.ofdm.P = sec.positive("P_w");
    try {
      s.ofdm.validate();
    } catch (const std::invalid_argument& e) {
      rd.fail(rd.line_of("ofdm"), e.what());
    }
  }
  {
    const Section sec(rd, doc["channel"], "channel", rd.offset_of("channel"));
    sec.allow({"L_m", "lambda_nm", "atten_db_per_km", "Cn2", "theta_mrad", "A_cm2", "reflectivity", "G_T", "G_R",
               "override_gain_c_db", "override_gain_s_db"});
    auto& c = s.channel;
    c.L_m = sec.positive("L_m");
    c.lambda_nm = sec.positive("lambda_nm");
    c.atten_db_per_km = sec.number("atten_db_per_km");
    c.Cn2 = sec.number("Cn2");
    if (c.Cn2 < 0.0) sec.fail_at("Cn2", "must be non-negative");
    c.theta_mrad = sec.positive("theta_mrad");
    c.A_cm2 = sec.positive("A_cm2");
    c.reflectivity = sec.positive("reflectivity");
    if (c.reflectivity > 1.0) sec.fail_at("reflectivity", "must not exceed 1");
    c.G_T = sec.positive("G_T");
    c.G_R = sec.positive("G_R");
    c.override_gain_c_db = sec.optional_number("override_gain_c_db");
    c.override_gain_s_db = sec.optional_number("override_gain_s_db");
  }
  {
    const Section sec(rd, doc["noise"], "noise", rd.offset_of("noise"));
    sec.allow({"N_c_dbhz", "N_s_dbhz", "gain_moment"});
    s.noise.N_c_dbhz = sec.number("N_c_dbhz");
    s.noise.N_s_dbhz = sec.number("N_s_dbhz");
    if (sec.has("gain_moment")) {
      const auto g = sec.string("gain_moment");
      if (g == "square_of_mean") {
        s.noise.gain_moment = GainMoment::SquareOfMean;
      } else if (g == "mean_of_square") {
        s.noise.gain_moment = GainMoment::MeanOfSquare;
      } else {
        sec.fail_at("gain_moment", "must be \"square_of_mean\" or \"mean_of_square\"");
      }
    }
  }
  {
    const Section sec(rd, doc["problem"], "problem", rd.offset_of("problem"));
    sec.allow({"mode", "precision_cm", "C0_bpshz", "p_max"});
    const auto mode = sec.string("mode");
    if (mode == "CommCentric") {
      s.problem.mode = Mode::CommCentric;
      if (sec.has("C0_bpshz")) sec.fail_at("C0_bpshz", "is not used by CommCentric problems");
      s.problem.precision_m = sec.positive("precision_cm") / 100.0;
    } else if (mode == "SensingCentric") {
      s.problem.mode = Mode::SensingCentric;
      if (sec.has("precision_cm")) sec.fail_at("precision_cm", "is not used by SensingCentric problems");
      s.problem.C0_bpshz = sec.number("C0_bpshz");
      if (s.problem.C0_bpshz < 0.0) sec.fail_at("C0_bpshz", "must be non-negative");
    } else {
      sec.fail_at("mode", "must be \"CommCentric\" or \"SensingCentric\"");
    }
    s.problem.p_max = sec.positive("p_max");
    try {
      s.problem.validate(s.ofdm);
    } catch (const std::invalid_argument& e) {
      sec.fail_at("p_max", e.what());
    }
  }
  if (doc.contains("mc")) {
    const Section sec(rd, doc["mc"], "mc", rd.offset_of("mc"));
    sec.allow({"trials", "seed", "tof_s", "ns_sweep_dbhz", "interpolation", "oversample", "clip_samples",
               "clip_bias_sigma"});
    auto& m = s.mc;
    m.present = true;
    const auto trials = sec.integer("trials");
    if (trials < 1) sec.fail_at("trials", "must be >= 1");
    m.trials = static_cast<int>(trials);
    m.seed = sec.unsigned_integer("seed");
    m.tof_s = sec.optional_number("tof_s");
    if (m.tof_s && (*m.tof_s < 0.0 || *m.tof_s >= s.ofdm.T_g)) sec.fail_at("tof_s", "must lie in [0, T_g)");
    if (sec.has("ns_sweep_dbhz")) m.ns_sweep_dbhz = sec.numbers("ns_sweep_dbhz");
    if (sec.has("interpolation")) {
      const auto i = sec.string("interpolation");
      if (i == "parabolic") {
        m.interpolation = Interpolation::Parabolic;
      } else if (i == "none") {
        m.interpolation = Interpolation::None;
      } else {
        sec.fail_at("interpolation", "must be \"parabolic\" or \"none\"");
      }
    }
    if (sec.has("oversample")) {
      const auto u = sec.integer("oversample");
      if (u < 1 || u > 1024) sec.fail_at("oversample", "must be in [1, 1024]");
      m.oversample = static_cast<int>(u);
    }
    if (sec.has("clip_samples")) {
      const auto n = sec.integer("clip_samples");
      if (n < 1) sec.fail_at("clip_samples", "must be >= 1");
      m.clip_samples = static_cast<std::size_t>(n);
    }
    if (sec.has("clip_bias_sigma")) {
      m.clip_bias_sigma = sec.numbers("clip_bias_sigma");
      for (double v : m.clip_bias_sigma) {
        if (v < 0.0) sec.fail_at("clip_bias_sigma", "entries must be non-negative");
      }
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError(path.string() + ":0: cannot open scenario file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

LinkParams comm_link(const Scenario& s) {
  LinkParams l;
  l.L = s.channel.L_m;
  l.lambda_opt = s.channel.lambda_nm * 1e-9;
  l.Cn2 = s.channel.Cn2;
  l.atten_db_per_km = s.channel.atten_db_per_km;
  l.theta = s.channel.theta_mrad * 1e-3;
  l.A = s.channel.A_cm2 * 1e-4;
  l.G_T = s.channel.G_T;
  l.G_R = s.channel.G_R;
  l.reflectivity = s.channel.reflectivity;
  l.noise_psd = db_to_linear(s.noise.N_c_dbhz);
  return l;
}

LinkParams sensing_link(const Scenario& s) {
  LinkParams l = comm_link(s);
  l.noise_psd = db_to_linear(s.noise.N_s_dbhz);
  return l;
}

SystemModel build_model(const Scenario& s) {
  ChannelState ch = stationary_gains(comm_link(s), sensing_link(s), s.ofdm.N);
  if (s.channel.override_gain_c_db) ch.h_bar_c = db_to_linear(*s.channel.override_gain_c_db);
  if (s.channel.override_gain_s_db) ch.h_bar_s = db_to_linear(*s.channel.override_gain_s_db);
  NoiseParams noise;
  noise.N_c = db_to_linear(s.noise.N_c_dbhz);
  noise.N_s = db_to_linear(s.noise.N_s_dbhz);
  noise.reflectivity = s.channel.reflectivity;
  noise.gain_moment = s.noise.gain_moment;
  return SystemModel(s.ofdm, std::move(ch), noise);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string allocation_csv(const AllocationSolution& sol) {
  std::string out = "k,p_norm,gamma_c,gamma_s\n";
  for (std::size_t i = 0; i < sol.p_norm.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',' + format_number(sol.p_norm[i]);
    out += ',' + format_number(i < sol.snr.gamma_c.size() ? sol.snr.gamma_c[i] : 0.0);
    out += ',' + format_number(i < sol.snr.gamma_s.size() ? sol.snr.gamma_s[i] : 0.0);
    out += '\n';
  }
  return out;
}

std::string solution_json(const Scenario& s, const AllocationSolution& sol) {
  // Numbers go through format_number so the output does not depend on json's float printer.
  auto num = [](double v) { return json::parse(std::isfinite(v) ? format_number(v) : std::string("null")); };
  json j;
  j["scenario"] = s.source;
  j["mode"] = to_string(s.problem.mode);
  j["status"] = to_string(sol.status);
  j["case_tag"] = to_string(sol.case_tag);
  j["b"] = num(sol.b_opt);
  j["duals"] = {{"mu", num(sol.duals.mu)}, {"eta", num(sol.duals.eta)}};
  j["C_bpshz"] = num(sol.metrics.C);
  j["I_tau_s2"] = num(sol.metrics.I_tau);
  j["I_m2"] = num(sol.metrics.I);
  j["precision_m"] = num(sol.metrics.crb_distance);
  if (s.problem.mode == Mode::CommCentric) {
    j["target_precision_m"] = num(s.problem.precision_m);
  } else {
    j["target_C0_bpshz"] = num(s.problem.C0_bpshz);
  }
  j["p_max"] = num(s.problem.p_max);
  j["iterations"] = sol.iterations;
  json trace = json::array();
  for (const auto& it : sol.trace) {
    json row;
    row["iteration"] = it.index;
    row["b"] = num(it.b);
    row["case_tag"] = to_string(it.case_tag);
    row["C_bpshz"] = num(it.C);
    row["I_tau_s2"] = num(it.I_tau);
    row["mu"] = num(it.duals.mu);
    row["eta"] = num(it.duals.eta);
    row["dual_iterations"] = it.dual_iterations;
    json res = json::array();
    for (double r : it.dual_residuals) res.push_back(num(r));
    row["dual_residuals"] = res;
    row["bias_evaluations"] = it.bias_evaluations;
    row["non_unimodal"] = it.non_unimodal;
    trace.push_back(row);
  }
  j["trace"] = trace;
  j["events"] = sol.events;
  return j.dump(2) + "\n";
}

std::string clipping_report_csv(const std::vector<ClippingReport>& reports) {
  std::string out = "bias,sigma_x,samples,quantity,analytic,empirical,abs_error,rel_error,tolerance,tolerance_kind,pass\n";
  for (const auto& r : reports) {
    for (const auto& c : r.checks) {
      out += format_number(r.bias) + ',' + format_number(r.sigma_x) + ',' + std::to_string(r.samples) + ',' +
             c.quantity + ',' + format_number(c.analytic) + ',' + format_number(c.empirical) + ',' +
             format_number(c.abs_error) + ',' + format_number(c.rel_error) + ',' + format_number(c.tolerance) + ',' +
             (c.absolute ? "absolute" : "relative") + ',' + (c.pass ? "true" : "false") + '\n';
    }
  }
  return out;
}

std::string crb_report_csv(const std::vector<CrbPoint>& points) {
  std::string out = "snr_db,trials,rmse_m,crb_m,ratio\n";
  for (const auto& p : points) {
    out += format_number(p.snr_db) + ',' + std::to_string(p.trials) + ',' + format_number(p.rmse_m) + ',' +
           format_number(p.crb_m) + ',' + format_number(p.ratio) + '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fsoisac
