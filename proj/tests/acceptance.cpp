// One PASS/FAIL line per acceptance criterion. Scenario values come from the shipped defaults.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "phonon/lab.hpp"

using namespace phonon;
using namespace phonon::netsim;
namespace fs = std::filesystem;
using lab::json;

namespace {

struct Criterion {
  Criterion(int i, std::string n) : id(i), name(std::move(n)) {}

  int id;
  std::string name;
  bool ok = true;
  std::vector<std::string> parts;

  // want: |x - target| <= tol
  void near(const std::string& what, double x, double target, double tol) {
    bool pass = std::isfinite(x) && std::abs(x - target) <= tol;
    add(what, x, pass, fmt("%.6g +- %.3g", target, tol));
  }
  void within(const std::string& what, double x, double lo, double hi) {
    add(what, x, std::isfinite(x) && x >= lo && x <= hi, fmt("[%.6g, %.6g]", lo, hi));
  }
  void above(const std::string& what, double x, double lo) { add(what, x, std::isfinite(x) && x > lo, fmt("> %.6g", lo)); }
  void below(const std::string& what, double x, double hi) { add(what, x, std::isfinite(x) && x < hi, fmt("< %.6g", hi)); }
  void runtime(const std::string& what, double s, double limit) { add(what + " s", s, s < limit, fmt("< %.3g", limit)); }

  void add(const std::string& what, double x, bool pass, const std::string& want) {
    ok = ok && pass;
    parts.push_back(what + "=" + fmt("%.6g", x) + (pass ? "" : " [want " + want + "]"));
  }

  static std::string fmt(const char* f, double a, double b = 0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
  }

  void print() const {
    std::printf("%s %2d %s:", ok ? "PASS" : "FAIL", id, name.c_str());
    for (std::size_t i = 0; i < parts.size(); ++i) std::printf("%s %s", i ? ";" : "", parts[i].c_str());
    std::printf("\n");
    std::fflush(stdout);
  }
};

fs::path workdir() {
  auto p = fs::temp_directory_path() / ("phonon_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

struct Run {
  std::map<std::string, double> m;
  double seconds = 0;
  double operator[](const std::string& k) const {
    auto it = m.find(k);
    return it == m.end() ? NAN : it->second;
  }
};

Run scenario(const std::string& name, const std::vector<std::string>& overrides = {}) {
  json c = lab::default_config();
  c["scenario"] = name;
  for (const auto& o : overrides) lab::apply_override(c, o);
  std::string tag = name;
  for (const auto& o : overrides) tag += "_" + std::to_string(std::hash<std::string>{}(o) % 100000);
  auto rep = lab::run(c, workdir() / tag);
  Run r;
  for (const auto& [k, v] : rep.metrics) r.m[k] = v.value;
  r.seconds = rep.wall_seconds;
  return r;
}

DeviceSetup default_setup() { return lab::build_experiment(lab::default_config()).setup; }

// Error contraction of a scalar observable under dt halving, against a 4x finer reference.
double contraction(const std::function<double(double)>& obs, double dt) {
  double a = obs(dt), b = obs(dt / 2), ref = obs(dt / 8);
  return std::abs(a - ref) / std::abs(b - ref);
}

// ---- Criteria ----

Criterion c1() {
  Criterion c{1, "channel arithmetic"};
  ChannelParams ch = default_setup().channel;
  c.near("tau_ns", ch.delay() * 1e9, 517.7, 0.05);
  c.near("tau_RT_us", ch.round_trip() * 1e6, 1.035, 5e-4);
  c.near("eta", ch.transmission(), 0.708, 5e-4);
  c.near("alpha_from_T_saw", analysis::loss_from_decay_time(ch.velocity, 1.5e-6), 172.6, 0.05);
  c.near("alpha_roundtrip", analysis::loss_from_decay_time(ch.velocity, ch.decay_time()), ch.loss_alpha, 1e-9);
  return c;
}

Criterion c2(Run& uni) {
  Criterion c{2, "unidirectional transfer"};
  uni = scenario("transfer");
  c.near("Pe_Q2", uni["final_pe_q2"], 0.68, 0.03);
  c.near("loss_penalty", uni["loss_penalty"], 0.27, 0.03);
  c.near("coherence_penalty", uni["coherence_penalty"], 0.03, 0.015);
  c.runtime("runtime", uni.seconds, 10);
  return c;
}

Criterion c3(const Run& uni) {
  Criterion c{3, "bidirectional transfer"};
  auto bi = scenario("transfer", {"carrier=bi"});
  c.near("Pe_Q2", bi["final_pe_q2"], 0.15, 0.04);
  c.near("uni_over_bi", uni["final_pe_q2"] / bi["final_pe_q2"], 4.5, 0.7);
  c.runtime("runtime", bi.seconds, 20);
  return c;
}

Criterion c4() {
  Criterion c{4, "process tomography"};
  auto u = scenario("process-tomo");
  auto b = scenario("process-tomo", {"carrier=bi"});
  c.near("F_uni", u["process_fidelity"], 0.82, 0.04);
  c.within("F_bi", b["process_fidelity"], 0.30, 0.52);
  auto in = tomo::process_inputs();
  double chi_ii = tomo::process_tomography(in).mat()(0, 0).real();
  c.near("identity_chi_II", chi_ii, 1.0, 1e-9);
  c.runtime("runtime", u.seconds + b.seconds, 60);
  return c;
}

Criterion c5(double& bell_f) {
  Criterion c{5, "Bell state"};
  auto r = scenario("bell");
  bell_f = r["fidelity"];
  c.within("fidelity", r["fidelity"], 0.70, 0.85);
  c.within("concurrence", r["concurrence"], 0.50, 0.65);
  // Ideal limit: read out once the sech tail has landed. At the shipped t_m about 0.2% is still in flight.
  auto lim = default_setup();
  lim.t_m = lim.emission_center_uni + lim.channel.delay() + 3 * lim.settle_uni;
  double ideal = bell_experiment(lim, {true}).fidelity;
  c.above("ideal_fidelity", ideal, 0.999);
  c.runtime("runtime", r.seconds, 10);
  return c;
}

Criterion c6() {
  Criterion c{6, "dispersive chain"};
  double chi = analysis::dispersive_shift(14.85e6, 214e6);
  c.near("chi_MHz", chi / 1e6, 1.03, 0.005);
  auto i = scenario("interferometer");
  auto r = scenario("ramsey-probe");
  c.near("interferometer_chi_MHz", i["chi_MHz"], 1.03, 0.005);
  c.near("dphi_pi", i["fringe_shift_pi"], 0.41, 0.02);
  c.near("ramsey_dtheta_pi", r["fringe_shift_pi"], 0.99, 0.02);
  c.near("ramsey_chi_MHz", r["chi_MHz"], 2.63, 0.01);
  c.near("visibility", i["visibility"], 0.32, 0.08);
  c.runtime("runtime", i.seconds + r.seconds, 10);
  return c;
}

Criterion c7() {
  Criterion c{7, "loss characterization"};
  auto r = scenario("loss-characterization");
  c.near("T_saw_us", r["T_saw_us"], 1.5, 0.045);
  c.near("revival_ratio", r["revival_energy_ratio"], 0.50, 0.02);
  c.runtime("runtime", r.seconds, 20);
  return c;
}

Criterion c8() {
  Criterion c{8, "wavepacket shaping"};
  auto s = default_setup();
  double fu = pulse::sech_mode(s.kappa_c_uni, 1, 200e-9).amplitude_fwhm();
  double fb = pulse::sech_mode(s.kappa_c_bi, 1, 300e-9).amplitude_fwhm();
  c.near("fwhm_x_kappa", fu * s.kappa_c_uni, 5.268, 1e-3);
  c.near("fwhm_uni_ns", fu * 1e9, 83.8, 0.05);
  c.near("fwhm_bi_ns", fb * 1e9, 139.7, 0.05);
  c.below("uni_vs_81ns", std::abs(fu * 1e9 / 81 - 1), 0.05);
  c.below("bi_vs_138ns", std::abs(fb * 1e9 / 138 - 1), 0.05);

  // Emitted |c_out|^2 against the target mode, default coupler range.
  auto mode = pulse::sech_mode(s.kappa_c_uni, 1.0, s.emission_center_uni, s.mode_truncation);
  mode = mode.clipped(0.0, mode.t_end());
  auto sched = pulse::emission_schedule(mode, s.kappa_max);
  const double dt = 0.05e-9;
  auto run = pulse::simulate_node(sched, 1.0, [](double) { return qmath::cd(0); }, mode.t_start(), mode.t_end(), dt);
  // Relative L2 norm of the intensity difference.
  double err = 0, ref = 0;
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    err += std::pow(std::norm(run.out[i]) - mode.intensity(run.t[i]), 2) * dt;
    ref += std::pow(mode.intensity(run.t[i]), 2) * dt;
  }
  c.below("mode_L2_error", std::sqrt(err / ref), 1e-3);

  TransferOptions o;
  o.loss = false;
  o.coherence_q1 = o.coherence_q2 = false;
  c.above("release_catch", transfer_experiment(Carrier::uni, s, o).pe_q2, 0.995);
  return c;
}

Criterion c9(double bell_f) {
  Criterion c{9, "readout pipeline"};
  auto v = tomo::VisibilityMatrix::device_default();
  c.near("visibility", v.total_visibility(), 0.9465, 5e-5);
  double worst = 0;
  for (unsigned k = 0; k < 16; ++k) {
    tomo::Prob4 p = tomo::Prob4::Random().cwiseAbs() + tomo::Prob4::Constant(0.01);
    p /= p.sum();
    worst = std::max(worst, (tomo::correct_readout(tomo::apply_readout(p, v), v).p - p).cwiseAbs().maxCoeff());
  }
  c.below("inversion_error", worst, 1e-12);
  auto r = bell_experiment(default_setup());
  auto fwd = tomo::state_tomography(tomo::apply_readout(tomo::measure_settings(r.rho), v));
  c.near("fidelity_drop", bell_f - tomo::bell_fidelity(fwd), 0.07, 0.02);
  return c;
}

Criterion c10() {
  Criterion c{10, "SAW model"};
  auto udt = lab::build_experiment(lab::default_config()).udt;
  auto f = saw::frequency_grid(3.80e9, 4.20e9, 0.25e6);
  auto r = saw::udt_response(udt, f);
  double best = -1e9;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] >= 3.87e9 && f[i] <= 4.01e9) best = std::max(best, r.directivity_db[i]);
  c.above("max_directivity_dB", best, 20);
  auto at = saw::udt_response(udt, {4.102e9});
  c.below("directivity_4p102_dB", at.directivity_db[0], 3);
  auto n = saw::find_notch(r, 3.85e9, 4.0e9);
  c.near("notch_GHz", n.frequency / 1e9, 3.92, 0.02);
  c.near("notch_width_MHz", n.width / 1e6, 15, 5);
  // Defects are scaled by the band's peak conductance; near transduction zeros G itself is round-off.
  double gain = 0, defect = 0, recip = 0, gmax = 0;
  for (double x : f) {
    auto p = saw::udt_pmatrix(udt, x);
    gain = std::max(gain, saw::acoustic_gain(p));
    gmax = std::max(gmax, p(2, 2).real());
    defect = std::min(defect, saw::energy_defect(p));
    recip = std::max(recip, saw::reciprocity_error(p) / std::max(1.0, std::abs(p(2, 0))));
  }
  defect /= gmax;
  c.below("acoustic_gain-1", gain - 1, 1e-9);
  c.above("relative_energy_defect", defect, -1e-9);
  c.below("reciprocity_error", recip, 1e-9);
  auto lossy = udt;
  lossy.loss_alpha = 173;
  double dmin = 1;
  for (double x : f) dmin = std::min(dmin, saw::energy_defect(saw::udt_pmatrix(lossy, x)));
  c.above("lossy_defect", dmin, 0);
  return c;
}

Criterion c11() {
  Criterion c{11, "numerical hygiene"};
  auto s = default_setup();

  // Trace and positivity of engine A states sampled through the Bell and transfer protocols.
  double tr_err = 0, min_eig = 1;
  {
    auto half = pulse::sech_mode(s.kappa_c_uni, 0.5, s.emission_center_uni, s.mode_truncation);
    half = half.clipped(0.0, half.t_end());
    auto n1 = s.node(1, Carrier::uni), n2 = s.node(2, Carrier::uni);
    n1.schedule = pulse::emission_schedule(half, s.kappa_max, 1.0);
    n2.schedule = pulse::capture_schedule(half.delayed(s.channel.delay()), s.kappa_max, 0.0);
    auto grid = grid_ending_at(s.t_m, s.grid_dt());
    CascadedOptions o;
    for (std::size_t k = delay_cells(s.channel, grid.dt()); k <= grid.steps(); k += 25) o.state_times.push_back(grid.at(k));
    auto r = run_cascaded(n1, n2, s.channel, grid, o);
    for (const auto& st : r.states) {
      tr_err = std::max(tr_err, std::abs(st.trace() - 1));
      min_eig = std::min(min_eig, st.min_eigenvalue());
    }
  }
  c.below("trace_error", tr_err, 1e-6);
  c.above("min_eigenvalue", min_eig, -1e-6);

  // dt halving on the shipped configuration. Branch restarts are binned on the grid, so they stay off here.
  auto at = [&](double dt) {
    auto x = s;
    x.dt = dt;
    x.branches.enabled = false;
    return x;
  };
  auto uni_pe = [&](double dt) { return transfer_experiment(Carrier::uni, at(dt)).pe_q2; };
  auto bi_pe = [&](double dt) { return transfer_experiment(Carrier::bi, at(dt)).pe_q2; };
  auto bell_f = [&](double dt) { return bell_experiment(at(dt)).fidelity; };
  auto fringe = [&](double dt) { return interferometer_experiment(at(dt), 0.0, {0.7, 1.7, 2.7, 3.7, 4.7, 5.7}).samples[0].second; };
  auto catch1 = [&](double dt) { return loss_characterization(at(dt), 3).captures[0].second; };
  c.above("rk4_contraction_engine_A_transfer", contraction(uni_pe, 4e-9), 8);
  c.above("rk4_contraction_engine_A_bell", contraction(bell_f, 4e-9), 8);
  c.above("rk4_contraction_engine_B_transfer", contraction(bi_pe, 4e-9), 8);
  c.above("rk4_contraction_engine_B_interferometer", contraction(fringe, 4e-9), 8);
  c.above("rk4_contraction_engine_B_capture", contraction(catch1, 4e-9), 8);

  // Engines A and B on the Bell protocol: uni carrier, lossy channel, T1 and dephasing on.
  double diff = 0;
  {
    auto a = bell_experiment(s).trajectory;
    auto b = bell_populations_field(s, false);
    for (std::size_t k = 0; k < a.size(); ++k)
      diff = std::max({diff, std::abs(a.pe_q1[k] - b.pe_q1[k]), std::abs(a.pe_q2[k] - b.pe_q2[k])});
  }
  c.below("engine_A_vs_B", diff, 1e-3);
  return c;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const Criterion& c) {
    c.print();
    failed += !c.ok;
  };
  try {
    Run uni;
    double bell_f = NAN;
    report(c1());
    report(c2(uni));
    report(c3(uni));
    report(c4());
    report(c5(bell_f));
    report(c6());
    report(c7());
    report(c8());
    report(c9(bell_f));
    report(c10());
    report(c11());
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  fs::remove_all(workdir());
  std::printf("%d of 11 criteria failed\n", failed);
  return failed ? 1 : 0;
}
