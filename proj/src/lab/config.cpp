#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "phonon/lab.hpp"

namespace phonon::lab {

namespace {

constexpr double kTwoPi = 2 * M_PI;

json coherence(double t1, double t2r, double t2e) {
  return {{"T1_us", t1}, {"T2_ramsey_us", t2r}, {"T2_echo_us", t2e}};
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"transfer",       "bell",
                                                 "freq-map",       "interferometer",
                                                 "ramsey-probe",   "loss-characterization",
                                                 "process-tomo"};
  return names;
}

std::string Diagnostic::str() const {
  return std::string(level == Level::error ? "error" : "warning") + ": " + (path.empty() ? "" : path + ": ") + message;
}

json default_config() {
  json c;
  c["schema_version"] = kSchemaVersion;
  c["scenario"] = "transfer";
  c["carrier"] = "uni";
  c["shots"] = 0;
  c["seed"] = 1;
  c["output_dir"] = "phononlab_out";
  c["plots"] = true;

  c["node1"] = {{"idle_frequency_GHz", 4.221},
                {"anharmonicity_MHz", 198.0},
                {"capacitance_fF", 90.0},
                {"squid_inductance_nH", 10.8},
                {"coupler_inductance_pH", 910.0},
                {"thermal_population", 0.0137},
                {"thermal_population_thermalized", 0.0047},
                {"coherence",
                 {{"uni", coherence(51, 0.79, 2.48)}, {"bi", coherence(38, 0.95, 2.48)}, {"idle", coherence(57, 1.11, 3.8)}}}};
  c["node2"] = {{"idle_frequency_GHz", 4.359},
                {"anharmonicity_MHz", 198.0},
                {"capacitance_fF", 90.0},
                {"squid_inductance_nH", 10.1},
                {"coupler_inductance_pH", 873.0},
                {"thermal_population", 0.0698},
                {"thermal_population_thermalized", 0.0021},
                {"coherence",
                 {{"uni", coherence(33, 0.55, 2.26)}, {"bi", coherence(31, 0.62, 1.68)}, {"idle", coherence(38, 0.88, 3.3)}}}};
  c["coupler"] = {{"mutual_inductance_pH", 160.0}, {"grounding_inductance_pH", 480.0}};
  c["channel"] = {{"length_mm", 2.0}, {"velocity_m_per_s", 3863.0}, {"loss_Np_per_m", 173.0}};
  c["dephasing"] = {{"transfer", "echo"}, {"interferometer", "ramsey"}};
  c["pulse"] = {{"carrier_uni_GHz", 3.976},    {"carrier_bi_GHz", 4.102},       {"kappa_c_uni_MHz", 10.0},
                {"kappa_c_bi_MHz", 6.0},       {"kappa_max_MHz", 25.0},         {"truncation", 1e-4},
                {"emission_center_uni_ns", 120.0}, {"emission_center_bi_ns", 200.0}, {"settle_uni_ns", 90.0},
                {"settle_bi_ns", 150.0}};
  c["bell"] = {{"t_m_ns", 725.0}};
  c["grid"] = {{"dt_ns", 1.0}};
  c["branches"] = {{"enabled", true}, {"bin_steps", 8}, {"min_weight", 1e-9}, {"max_depth", 4}};
  c["transducer"] = {
      {"model_directivity", true},
      {"directivity_bi", 0.5},
      {"d_eff_nm", 140.0},
      {"kappa_udt_MHz", 147.0},
      {"f_ref_GHz", 3.976},
      {"loss_Np_per_m", 0.0},
      {"idt",
       {{"cells", 24},
        {"wavelength_um", 0.975},
        {"aperture_um", 150.0},
        {"metallization", 0.52},
        {"reflectivity_im", -0.009},
        {"dv_v", 0.0344},
        {"velocity_m_per_s", 3875.0},
        {"transduction", 1e-3}}},
      {"mirror",
       {{"electrodes", 488},
        {"wavelength_um", 1.0},
        {"aperture_um", 150.0},
        {"metallization", 0.79},
        {"reflectivity_im", -0.045},
        {"dv_v", 0.027},
        {"gap_nm", 500.0}}}};
  c["dispersive"] = {{"kappa_udt_MHz", 147.0},
                     {"interferometer",
                      {{"kappa_q_MHz", 6.0}, {"qubit_frequency_GHz", 4.190}, {"carrier_GHz", 3.976}, {"dt_ns", 200.0}}},
                     {"ramsey", {{"g_MHz", 23.72}, {"kappa_q_MHz", 7.65}, {"dt_ns", 190.0}}}};
  json vm = json::array();
  // Printed calibration values; the repair of rounded rows happens on load.
  const double printed[4][4] = {{0.959, 0.015, 0.025, 0.001},
                                {0.031, 0.946, 0.001, 0.023},
                                {0.033, 0.001, 0.949, 0.018},
                                {0.001, 0.036, 0.031, 0.932}};
  for (const auto& r : printed) vm.push_back({r[0], r[1], r[2], r[3]});
  c["readout"] = {{"mode", "ideal"}, {"virtual_z", true}, {"single_qubit_visibility", 0.94}, {"visibility_matrix", vm}};
  c["sweep"] = {{"phase_rad", {{"start", 0.0}, {"stop", kTwoPi * 15.0 / 16.0}, {"steps", 16}}},
                {"frequency_GHz", {{"start", 3.8}, {"stop", 4.2}, {"steps", 81}}}};
  c["freq_map"] = {{"t_end_us", 4.0}, {"sample_ns", 10.0}, {"kappa_MHz", 2.4}, {"saw_df_MHz", 0.5},
                   {"revival_threshold", 0.1}, {"branch_bin_steps", 32}};
  c["loss_characterization"] = {{"round_trips", 4}};
  return c;
}

json read_config_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw FilesystemError("cannot read config file " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SchemaError(p.string() + " is not valid JSON: " + e.what());
  }
}

json merge_defaults(const json& user) {
  if (!user.is_object()) throw SchemaError("configuration must be a JSON object");
  json out = default_config();
  out.merge_patch(user);
  return out;
}

void apply_override(json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError("override must look like key.path=value: " + assignment);
  std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &cfg;
  std::stringstream ks(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ks, part, '.')) {
    if (part.empty()) throw SchemaError("empty component in override key " + key);
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw SchemaError("override " + key + " descends into a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw SchemaError("override " + key + " descends into a non-object");
  (*node)[parts.back()] = value;
}

// ---- Validation ----

namespace {

struct Checker {
  std::vector<Diagnostic> out;

  void error(const std::string& path, const std::string& msg) { out.push_back({Diagnostic::Level::error, path, msg}); }
  void warn(const std::string& path, const std::string& msg) { out.push_back({Diagnostic::Level::warning, path, msg}); }

  static const char* kind(const json& j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
  }

  // Same shape as the defaults, no unknown keys.
  void shape(const json& ref, const json& v, const std::string& path) {
    if (ref.is_object()) {
      if (!v.is_object()) return error(path, std::string("expected an object, got ") + kind(v));
      for (auto it = v.begin(); it != v.end(); ++it) {
        std::string p = path.empty() ? it.key() : path + "." + it.key();
        if (!ref.contains(it.key()))
          error(p, "unknown key");
        else
          shape(ref.at(it.key()), it.value(), p);
      }
      for (auto it = ref.begin(); it != ref.end(); ++it)
        if (!v.contains(it.key())) error(path.empty() ? it.key() : path + "." + it.key(), "missing key");
      return;
    }
    if (std::string(kind(ref)) != kind(v)) error(path, std::string("expected a ") + kind(ref) + ", got " + kind(v));
  }

  const json* at(const json& c, const std::string& path) {
    const json* n = &c;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (!n->is_object() || !n->contains(part)) return nullptr;
      n = &n->at(part);
    }
    return n;
  }

  double num(const json& c, const std::string& path) {
    const json* n = at(c, path);
    return (n && n->is_number()) ? n->get<double>() : NAN;
  }

  void positive(const json& c, const std::string& path) {
    double x = num(c, path);
    if (!std::isnan(x) && !(x > 0 && std::isfinite(x))) error(path, "must be positive and finite");
  }
  void non_negative(const json& c, const std::string& path) {
    double x = num(c, path);
    if (!std::isnan(x) && !(x >= 0 && std::isfinite(x))) error(path, "must be non-negative and finite");
  }
  void integer(const json& c, const std::string& path, long lo) {
    const json* n = at(c, path);
    if (!n || !n->is_number()) return;
    double x = n->get<double>();
    if (x != std::floor(x) || x < double(lo)) error(path, "must be an integer >= " + std::to_string(lo));
  }
  void one_of(const json& c, const std::string& path, const std::vector<std::string>& allowed) {
    const json* n = at(c, path);
    if (!n || !n->is_string()) return;
    for (const auto& a : allowed)
      if (*n == a) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    error(path, "'" + n->get<std::string>() + "' is not one of {" + list + "}");
  }
};

}  // namespace

std::vector<Diagnostic> validate(const json& cfg) {
  Checker k;
  if (!cfg.is_object()) {
    k.error("", "configuration must be a JSON object");
    return k.out;
  }
  const json ref = default_config();
  k.shape(ref, cfg, "");
  const json* ver = k.at(cfg, "schema_version");
  if (ver && ver->is_number() && ver->get<double>() != kSchemaVersion)
    k.error("schema_version", "unsupported version, expected " + std::to_string(kSchemaVersion));

  k.one_of(cfg, "scenario", scenario_names());
  k.one_of(cfg, "carrier", {"uni", "bi"});
  k.one_of(cfg, "readout.mode", {"ideal", "uncorrected", "corrected"});
  k.one_of(cfg, "dephasing.transfer", {"echo", "ramsey"});
  k.one_of(cfg, "dephasing.interferometer", {"echo", "ramsey"});
  k.integer(cfg, "shots", 0);
  k.integer(cfg, "seed", 0);

  for (const char* node : {"node1", "node2"})
    for (const char* row : {"uni", "bi", "idle"}) {
      std::string base = std::string(node) + ".coherence." + row;
      for (const char* f : {"T1_us", "T2_ramsey_us", "T2_echo_us"}) k.positive(cfg, base + "." + f);
      double t1 = k.num(cfg, base + ".T1_us");
      for (const char* f : {"T2_ramsey_us", "T2_echo_us"}) {
        double t2 = k.num(cfg, base + "." + f);
        if (t1 > 0 && t2 > 2 * t1) k.warn(base + "." + f, "T2 exceeds 2*T1, which no physical qubit allows");
      }
    }
  for (const char* node : {"node1", "node2"})
    for (const char* f : {"thermal_population", "thermal_population_thermalized"}) {
      double p = k.num(cfg, std::string(node) + "." + f);
      if (!std::isnan(p) && (p < 0 || p > 0.5)) k.error(std::string(node) + "." + f, "must lie in [0, 0.5]");
    }

  for (const char* p : {"channel.length_mm", "channel.velocity_m_per_s", "grid.dt_ns", "pulse.kappa_c_uni_MHz",
                        "pulse.kappa_c_bi_MHz", "pulse.kappa_max_MHz", "pulse.truncation", "pulse.carrier_uni_GHz",
                        "pulse.carrier_bi_GHz", "bell.t_m_ns", "transducer.d_eff_nm", "transducer.kappa_udt_MHz",
                        "transducer.f_ref_GHz", "transducer.idt.wavelength_um", "transducer.idt.velocity_m_per_s",
                        "transducer.idt.transduction", "transducer.mirror.wavelength_um", "dispersive.kappa_udt_MHz",
                        "dispersive.interferometer.dt_ns", "dispersive.ramsey.dt_ns", "freq_map.t_end_us",
                        "freq_map.sample_ns", "freq_map.kappa_MHz", "freq_map.saw_df_MHz"})
    k.positive(cfg, p);
  for (const char* p : {"channel.loss_Np_per_m", "transducer.loss_Np_per_m", "pulse.emission_center_uni_ns",
                        "pulse.emission_center_bi_ns", "pulse.settle_uni_ns", "pulse.settle_bi_ns",
                        "dispersive.interferometer.kappa_q_MHz", "dispersive.ramsey.g_MHz",
                        "dispersive.ramsey.kappa_q_MHz", "branches.min_weight", "freq_map.revival_threshold"})
    k.non_negative(cfg, p);
  double trunc = k.num(cfg, "pulse.truncation");
  if (trunc >= 1) k.error("pulse.truncation", "must be below 1");
  double dbi = k.num(cfg, "transducer.directivity_bi");
  if (!std::isnan(dbi) && (dbi < 0 || dbi > 1)) k.error("transducer.directivity_bi", "must lie in [0, 1]");
  k.integer(cfg, "branches.bin_steps", 1);
  k.integer(cfg, "branches.max_depth", 0);
  k.integer(cfg, "transducer.idt.cells", 1);
  k.integer(cfg, "transducer.mirror.electrodes", 0);
  k.integer(cfg, "loss_characterization.round_trips", 2);
  k.integer(cfg, "freq_map.branch_bin_steps", 1);
  if (std::abs(k.num(cfg, "dispersive.interferometer.qubit_frequency_GHz") -
               k.num(cfg, "dispersive.interferometer.carrier_GHz")) == 0)
    k.error("dispersive.interferometer.qubit_frequency_GHz", "detuning from the carrier must be non-zero");

  for (const char* s : {"sweep.phase_rad", "sweep.frequency_GHz"}) {
    std::string b = s;
    k.integer(cfg, b + ".steps", 1);
    double a = k.num(cfg, b + ".start"), z = k.num(cfg, b + ".stop"), n = k.num(cfg, b + ".steps");
    if (!std::isnan(a) && !std::isnan(z) && !(z > a) && !(n == 1 && z == a)) k.error(b, "sweep range is empty");
  }

  if (const json* vm = k.at(cfg, "readout.visibility_matrix"); vm && vm->is_array()) {
    bool ok = vm->size() == 4;
    for (const auto& r : *vm) ok = ok && r.is_array() && r.size() == 4;
    if (!ok)
      k.error("readout.visibility_matrix", "must be a 4x4 array of numbers");
    else {
      Eigen::Matrix4d rows;
      bool nums = true;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          nums = nums && (*vm)[i][j].is_number();
          rows(i, j) = nums ? (*vm)[i][j].get<double>() : 0.0;
        }
      if (!nums)
        k.error("readout.visibility_matrix", "must be a 4x4 array of numbers");
      else
        try {
          auto v = tomo::VisibilityMatrix::from_calibration_rows(rows);
          if (v.condition_number() >= 1e3) k.error("readout.visibility_matrix", "too ill-conditioned to invert");
        } catch (const std::exception& e) {
          k.error("readout.visibility_matrix", e.what());
        }
    }
  }
  return k.out;
}

bool has_errors(const std::vector<Diagnostic>& d) {
  for (const auto& x : d)
    if (x.level == Diagnostic::Level::error) return true;
  return false;
}

// ---- Typed view ----

Experiment build_experiment(const json& c) {
  Experiment e;
  auto d = [&](const char* path) {
    const json* n = &c;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) n = &n->at(part);
    return n->get<double>();
  };
  auto mhz = [&](const char* p) { return kTwoPi * d(p) * 1e6; };
  e.scenario = c.at("scenario").get<std::string>();
  e.carrier = c.at("carrier") == "bi" ? netsim::Carrier::bi : netsim::Carrier::uni;
  e.shots = c.at("shots").get<std::int64_t>();
  e.seed = c.at("seed").get<std::uint64_t>();
  e.plots = c.at("plots").get<bool>();

  auto& s = e.setup;
  auto coh = [&](const char* node, const char* row) {
    const json& j = c.at(node).at("coherence").at(row);
    return netsim::Coherence{j.at("T1_us").get<double>() * 1e-6, j.at("T2_ramsey_us").get<double>() * 1e-6,
                             j.at("T2_echo_us").get<double>() * 1e-6};
  };
  s.uni_q1 = coh("node1", "uni");
  s.uni_q2 = coh("node2", "uni");
  s.bi_q1 = coh("node1", "bi");
  s.bi_q2 = coh("node2", "bi");
  s.idle_q1 = coh("node1", "idle");
  s.idle_q2 = coh("node2", "idle");
  auto deph = [](const json& j) {
    return j == "ramsey" ? netsim::DephasingSource::ramsey : netsim::DephasingSource::echo;
  };
  s.dephasing = deph(c.at("dephasing").at("transfer"));
  s.interferometer_dephasing = deph(c.at("dephasing").at("interferometer"));
  s.channel.length = d("channel.length_mm") * 1e-3;
  s.channel.velocity = d("channel.velocity_m_per_s");
  s.channel.loss_alpha = d("channel.loss_Np_per_m");
  s.f_uni = d("pulse.carrier_uni_GHz") * 1e9;
  s.f_bi = d("pulse.carrier_bi_GHz") * 1e9;
  s.kappa_c_uni = mhz("pulse.kappa_c_uni_MHz");
  s.kappa_c_bi = mhz("pulse.kappa_c_bi_MHz");
  s.kappa_max = mhz("pulse.kappa_max_MHz");
  s.mode_truncation = d("pulse.truncation");
  s.emission_center_uni = d("pulse.emission_center_uni_ns") * 1e-9;
  s.emission_center_bi = d("pulse.emission_center_bi_ns") * 1e-9;
  s.settle_uni = d("pulse.settle_uni_ns") * 1e-9;
  s.settle_bi = d("pulse.settle_bi_ns") * 1e-9;
  s.directivity_bi = d("transducer.directivity_bi");
  s.t_m = d("bell.t_m_ns") * 1e-9;
  s.dt = d("grid.dt_ns") * 1e-9;
  s.kappa_revival = mhz("freq_map.kappa_MHz");
  s.branches.enabled = c.at("branches").at("enabled").get<bool>();
  s.branches.bin_steps = c.at("branches").at("bin_steps").get<int>();
  s.branches.min_weight = d("branches.min_weight");
  s.branches.max_depth = c.at("branches").at("max_depth").get<int>();

  auto& u = e.udt;
  const json& idt = c.at("transducer").at("idt");
  const json& mir = c.at("transducer").at("mirror");
  u.idt.cells = idt.at("cells").get<int>();
  u.idt.wavelength = idt.at("wavelength_um").get<double>() * 1e-6;
  u.idt.aperture = idt.at("aperture_um").get<double>() * 1e-6;
  u.idt.metallization_ratio = idt.at("metallization").get<double>();
  u.idt.reflectivity = cd(0.0, idt.at("reflectivity_im").get<double>());
  u.idt.dv_v = idt.at("dv_v").get<double>();
  u.idt.velocity = idt.at("velocity_m_per_s").get<double>();
  u.idt.transduction = idt.at("transduction").get<double>();
  u.mirror.electrodes = mir.at("electrodes").get<int>();
  u.mirror.wavelength = mir.at("wavelength_um").get<double>() * 1e-6;
  u.mirror.aperture = mir.at("aperture_um").get<double>() * 1e-6;
  u.mirror.metallization_ratio = mir.at("metallization").get<double>();
  u.mirror.reflectivity = cd(0.0, mir.at("reflectivity_im").get<double>());
  u.mirror.dv_v = mir.at("dv_v").get<double>();
  u.mirror.gap = mir.at("gap_nm").get<double>() * 1e-9;
  u.d_eff = d("transducer.d_eff_nm") * 1e-9;
  u.v_free = s.channel.velocity;
  u.loss_alpha = d("transducer.loss_Np_per_m");
  u.kappa_ref = mhz("transducer.kappa_udt_MHz");
  u.f_ref = d("transducer.f_ref_GHz") * 1e9;
  e.model_directivity = c.at("transducer").at("model_directivity").get<bool>();

  const json& ro = c.at("readout");
  e.readout = ro.at("mode") == "corrected"     ? tomo::Readout::corrected
              : ro.at("mode") == "uncorrected" ? tomo::Readout::uncorrected
                                               : tomo::Readout::ideal;
  e.virtual_z = ro.at("virtual_z").get<bool>();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e.visibility_rows(i, j) = ro.at("visibility_matrix")[i][j].get<double>();

  e.kappa_udt = d("dispersive.kappa_udt_MHz") * 1e6;
  e.kappa_q_interferometer = d("dispersive.interferometer.kappa_q_MHz") * 1e6;
  e.detuning = (d("dispersive.interferometer.qubit_frequency_GHz") - d("dispersive.interferometer.carrier_GHz")) * 1e9;
  e.interferometer_dt = d("dispersive.interferometer.dt_ns") * 1e-9;
  e.g_ramsey = d("dispersive.ramsey.g_MHz") * 1e6;
  e.kappa_q_ramsey = d("dispersive.ramsey.kappa_q_MHz") * 1e6;
  e.ramsey_dt = d("dispersive.ramsey.dt_ns") * 1e-9;

  const bool freq = e.scenario == "freq-map";
  const json& sw = c.at("sweep").at(freq ? "frequency_GHz" : "phase_rad");
  e.sweep_variable = freq ? "frequency_GHz" : "phase_rad";
  e.sweep_start = sw.at("start").get<double>();
  e.sweep_stop = sw.at("stop").get<double>();
  e.sweep_steps = sw.at("steps").get<int>();

  e.fm_t_end = d("freq_map.t_end_us") * 1e-6;
  e.fm_sample = d("freq_map.sample_ns") * 1e-9;
  e.fm_kappa = mhz("freq_map.kappa_MHz");
  e.fm_saw_df = d("freq_map.saw_df_MHz") * 1e6;
  e.fm_revival_threshold = d("freq_map.revival_threshold");
  e.fm_branch_bin_steps = c.at("freq_map").at("branch_bin_steps").get<int>();
  e.loss_round_trips = c.at("loss_characterization").at("round_trips").get<int>();
  return e;
}

}  // namespace phonon::lab
