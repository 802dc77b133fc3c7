#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "phonon/lab.hpp"

namespace phonon::lab {

namespace {

using netsim::Carrier;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// Collects files and metrics for one run directory.
struct Sink {
  std::filesystem::path dir;
  RunReport& rep;

  void file(const std::string& name, const std::string& text) {
    std::ofstream o(dir / name, std::ios::binary);
    if (!o || !(o << text) || !o.flush()) throw FilesystemError("cannot write " + (dir / name).string());
    rep.files.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { file(name, j.dump(2) + "\n"); }
  void metric(const std::string& key, double v, const std::string& def) {
    if (!std::isfinite(v)) throw netsim::EngineError("metric " + key + " is not finite");
    rep.metrics[key] = {v, def};
  }
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[std::size_t(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

json schedule_samples(const pulse::CouplerSchedule& s, double dt) { return json::parse(pulse::schedule_json(s, dt)); }

// Directivity of the node 1 transducer at the working point.
void prepare(Experiment& e) {
  if (!e.model_directivity) return;
  auto r = saw::udt_response(e.udt, {e.setup.f_uni}, Exec::serial);
  e.setup.directivity_uni = saw::directivity_fraction(r, e.setup.f_uni);
}

void trajectory_outputs(Sink& s, const Experiment& e, const netsim::Trajectory& t, const std::string& title) {
  s.file("trajectory.csv", trajectory_csv(t));
  if (!e.plots) return;
  Series a{"Pe Q1", {}, t.pe_q1}, b{"Pe Q2", {}, t.pe_q2}, c{"field", {}, t.field_energy};
  for (double x : t.times) a.x.push_back(x * 1e9);
  b.x = c.x = a.x;
  s.file("trajectory.svg", svg_plot(title, "t (ns)", "population", {a, b, c}));
}

// ---- Scenarios ----

void run_transfer(const Experiment& e, Sink& s) {
  const auto& st = e.setup;
  auto res = netsim::transfer_experiment(e.carrier, st);
  trajectory_outputs(s, e, res.trajectory, e.carrier == Carrier::uni ? "Unidirectional transfer" : "Bidirectional transfer");
  s.metric("final_pe_q2", res.pe_q2, "node 2 excited population at the analysis time");
  s.metric("t_analysis_ns", res.t_analysis * 1e9, "analysis time: capture center plus settle");
  s.metric("emission_capped", res.emission_capped ? 1 : 0, "1 if the emission coupling hit kappa_max");
  s.metric("capture_capped", res.capture_capped ? 1 : 0, "1 if the capture coupling hit kappa_max");
  const double kc = e.carrier == Carrier::uni ? st.kappa_c_uni : st.kappa_c_bi;
  auto mode = pulse::sech_mode(kc, 1.0, 0.0, st.mode_truncation);
  s.metric("mode_fwhm_ns", mode.amplitude_fwhm() * 1e9, "amplitude FWHM of the emitted sech mode");
  s.metric("directivity", e.carrier == Carrier::uni ? st.directivity_uni : st.directivity_bi,
           "fraction of emitted energy sent toward the far node");
  if (e.carrier == Carrier::uni) {
    auto b = netsim::transfer_loss_budget(st);
    s.metric("lossless_pe_q2", b.lossless, "final Pe_Q2 with a lossless channel");
    s.metric("ideal_pe_q2", b.ideal, "final Pe_Q2 with a lossless channel and no decoherence");
    s.metric("loss_penalty", b.loss_penalty, "lossless_pe_q2 - final_pe_q2");
    s.metric("coherence_penalty", b.coherence_penalty, "ideal_pe_q2 - lossless_pe_q2");
    s.metric("coherence_penalty_q1", b.q1_penalty, "coherence penalty with only node 1 decohering");
    s.metric("coherence_penalty_q2", b.q2_penalty, "coherence penalty with only node 2 decohering");
  } else {
    netsim::TransferOptions o;
    o.loss = false;
    o.coherence_q1 = o.coherence_q2 = false;
    s.metric("ideal_pe_q2", netsim::transfer_experiment(Carrier::bi, st, o).pe_q2,
             "final Pe_Q2 with a lossless channel and no decoherence");
    double uni = netsim::transfer_experiment(Carrier::uni, st).pe_q2;
    s.metric("uni_over_bi", uni / res.pe_q2, "unidirectional over bidirectional final Pe_Q2");
  }
  // Coupler schedules as played.
  const double dt = st.grid_dt();
  auto emitted = pulse::sech_mode(kc, 1.0, e.carrier == Carrier::uni ? st.emission_center_uni : st.emission_center_bi,
                                  st.mode_truncation);
  emitted = emitted.clipped(0.0, emitted.t_end());
  json sch;
  sch["node1"] = schedule_samples(pulse::emission_schedule(emitted, st.kappa_max, 1.0), dt);
  sch["node2"] = schedule_samples(pulse::capture_schedule(emitted.delayed(st.channel.delay()), st.kappa_max, 0.0), dt);
  s.json_file("schedules.json", sch);
}

DensityMatrix measured_state(const DensityMatrix& rho, const tomo::VisibilityMatrix& v, tomo::Readout mode,
                             std::int64_t shots, std::uint64_t seed) {
  auto settings = tomo::measure_settings(rho);
  const tomo::VisibilityMatrix id = tomo::VisibilityMatrix::identity();
  const tomo::VisibilityMatrix& fwd = mode == tomo::Readout::ideal ? id : v;
  settings = shots > 0 ? tomo::sample_settings(settings, fwd, shots, seed) : tomo::apply_readout(settings, fwd);
  return tomo::state_tomography(settings, mode == tomo::Readout::corrected ? &v : nullptr);
}

void run_bell(const Experiment& e, Sink& s) {
  auto res = netsim::bell_experiment(e.setup);
  trajectory_outputs(s, e, res.trajectory, "Half emission and capture");
  auto v = tomo::VisibilityMatrix::from_calibration_rows(e.visibility_rows);
  auto measured = measured_state(res.rho, v, e.readout, e.shots, e.seed);
  auto forward = measured_state(res.rho, v, tomo::Readout::uncorrected, 0, e.seed);
  double f_fwd = tomo::bell_fidelity(forward);
  s.metric("fidelity", res.fidelity, "simulated Bell fidelity, maximized over the Bell phase");
  s.metric("concurrence", res.concurrence, "Wootters concurrence of the simulated state");
  s.metric("bell_phase_rad", res.best_phase, "phase maximizing the Bell overlap");
  s.metric("t_m_ns", res.t_m * 1e9, "state evaluation time");
  s.metric("fidelity_readout", tomo::bell_fidelity(measured), "Bell fidelity after the configured readout pipeline");
  s.metric("concurrence_readout", tomo::concurrence(measured), "concurrence after the configured readout pipeline");
  s.metric("fidelity_uncorrected", f_fwd, "Bell fidelity with the visibility matrix applied, no correction");
  s.metric("readout_fidelity_drop", res.fidelity - f_fwd, "fidelity - fidelity_uncorrected");
  json j;
  j["rho"] = complex_matrix_json(res.rho.mat());
  j["rho_readout"] = complex_matrix_json(measured.mat());
  j["readout_mode"] = e.readout == tomo::Readout::ideal ? "ideal"
                      : e.readout == tomo::Readout::corrected ? "corrected" : "uncorrected";
  s.json_file("rho.json", j);
}

void run_process(const Experiment& e, Sink& s) {
  auto v = tomo::VisibilityMatrix::from_calibration_rows(e.visibility_rows);
  auto res = netsim::process_experiment(e.carrier, e.setup, e.readout, v.single_qubit(2), e.virtual_z);
  tomo::ChiMatrix chi = res.chi;
  std::array<DensityMatrix, 4> outs = res.outputs;
  if (e.shots > 0) {
    // Finite statistics: reconstruct node 2 through the two-qubit pipeline with node 1 in |g>.
    qmath::Mat g = qmath::Mat::Zero(2, 2);
    g(0, 0) = 1;
    for (std::size_t i = 0; i < 4; ++i) {
      auto joint = DensityMatrix::adopt(qmath::kron(g, res.transferred[i].mat()));
      auto m = measured_state(joint, v, e.readout, e.shots, e.seed + 7919 * i);
      outs[i] = DensityMatrix::adopt(qmath::project_to_density(qmath::partial_trace(m, 2).mat()));
    }
    chi = tomo::process_tomography(outs);
  }
  s.metric("process_fidelity", tomo::process_fidelity(chi, tomo::ChiMatrix::identity()),
           "chi_II, overlap of the process with the identity");
  s.metric("distance_to_ideal", tomo::chi_trace_distance(chi, tomo::ChiMatrix::identity()),
           "trace distance between chi and the identity process");
  s.metric("chi_min_eigenvalue", chi.min_eigenvalue(), "smallest eigenvalue of chi");
  json j;
  j["chi"] = complex_matrix_json(chi.mat());
  j["basis"] = {"I", "X", "Y", "Z"};
  j["inputs"] = {"g", "e", "+", "+i"};
  j["outputs"] = json::array();
  for (const auto& o : outs) j["outputs"].push_back(complex_matrix_json(o.mat()));
  s.json_file("chi.json", j);
}

void run_interferometer(const Experiment& e, Sink& s) {
  const double g = analysis::purcell_coupling(e.kappa_q_interferometer, e.kappa_udt);
  const double chi = analysis::dispersive_shift(g, e.detuning);
  const double dphi = analysis::dispersive_phase(chi, e.interferometer_dt);
  auto phis = linspace(e.sweep_start, e.sweep_stop, e.sweep_steps);
  auto rg = netsim::interferometer_experiment(e.setup, 0.0, phis);
  auto re = netsim::interferometer_experiment(e.setup, dphi, phis);
  std::string csv = "phi_rad,Pe_Q1_q2_g,Pe_Q1_q2_e\n";
  for (std::size_t i = 0; i < phis.size(); ++i)
    csv += fmt(phis[i]) + "," + fmt(rg.samples[i].second) + "," + fmt(re.samples[i].second) + "\n";
  s.file("fringes.csv", csv);
  s.json_file("fits.json", {{"q2_g", json::parse(analysis::fringe_json(rg.fit))},
                            {"q2_e", json::parse(analysis::fringe_json(re.fit))}});
  s.metric("g_MHz", g * 1e-6, "qubit to itinerant phonon coupling from the Purcell relation");
  s.metric("chi_MHz", chi * 1e-6, "dispersive shift g^2 / Delta");
  s.metric("predicted_shift_pi", dphi / M_PI, "2 pi chi dt in units of pi");
  s.metric("fringe_shift_pi", analysis::wrap_phase(re.fit.phase0 - rg.fit.phase0) / M_PI,
           "fitted fringe phase with Q2 excited minus Q2 ground, units of pi");
  s.metric("visibility", rg.fit.visibility, "fringe visibility (max - min) / (max + min), Q2 in ground");
  s.metric("visibility_q2_e", re.fit.visibility, "fringe visibility with Q2 excited");
  if (e.plots) {
    Series a{"Q2 g", phis, {}}, b{"Q2 e", phis, {}};
    for (std::size_t i = 0; i < phis.size(); ++i) {
      a.y.push_back(rg.samples[i].second);
      b.y.push_back(re.samples[i].second);
    }
    s.file("fringes.svg", svg_plot("Phonon interferometer", "phi (rad)", "Pe Q1", {a, b}));
  }
}

void run_ramsey(const Experiment& e, Sink& s) {
  const double chi = analysis::dispersive_shift(e.g_ramsey, e.detuning);
  netsim::RamseyOptions o;
  o.window = e.ramsey_dt;
  o.shift_phase = analysis::dispersive_phase(chi, e.ramsey_dt);
  o.leak_rate = 2 * M_PI * analysis::detuned_purcell_rate(e.kappa_q_ramsey, e.kappa_udt, e.detuning);
  auto thetas = linspace(e.sweep_start, e.sweep_stop, e.sweep_steps);
  auto r0 = netsim::ramsey_probe_experiment(e.setup, thetas, false, o);
  auto r1 = netsim::ramsey_probe_experiment(e.setup, thetas, true, o);
  std::string csv = "theta_rad,Pe_Q2_q1_g,Pe_Q2_q1_e\n";
  for (std::size_t i = 0; i < thetas.size(); ++i)
    csv += fmt(thetas[i]) + "," + fmt(r0.samples[i].second) + "," + fmt(r1.samples[i].second) + "\n";
  s.file("fringes.csv", csv);
  s.json_file("fits.json", {{"q1_g", json::parse(analysis::fringe_json(r0.fit))},
                            {"q1_e", json::parse(analysis::fringe_json(r1.fit))}});
  s.metric("chi_MHz", chi * 1e-6, "dispersive shift g^2 / Delta");
  s.metric("predicted_shift_pi", o.shift_phase / M_PI, "2 pi chi dt in units of pi");
  s.metric("fringe_shift_pi", std::abs(analysis::wrap_phase(r1.fit.phase0 - r0.fit.phase0)) / M_PI,
           "magnitude of the fitted Ramsey phase shift, Q1 excited vs ground, units of pi");
  s.metric("arrival_probability", r1.arrival_probability, "phonon energy reaching node 2");
  s.metric("leak_rate_MHz", o.leak_rate / (2 * M_PI) * 1e-6, "detuned decay of Q2 into the channel");
  s.metric("visibility_q1_g", r0.fit.visibility, "Ramsey fringe visibility with Q1 in ground");
  s.metric("visibility_q1_e", r1.fit.visibility, "Ramsey fringe visibility with Q1 excited");
  if (e.plots) {
    Series a{"Q1 g", thetas, {}}, b{"Q1 e", thetas, {}};
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      a.y.push_back(r0.samples[i].second);
      b.y.push_back(r1.samples[i].second);
    }
    s.file("fringes.svg", svg_plot("Ramsey phonon probe", "theta (rad)", "Pe Q2", {a, b}));
  }
}

void run_loss(const Experiment& e, Sink& s) {
  auto r = netsim::loss_characterization(e.setup, e.loss_round_trips);
  trajectory_outputs(s, e, r.revival, "Revivals with constant coupling");
  std::string csv = "round_trips,t_ns,Pe_Q1\n";
  for (std::size_t i = 0; i < r.captures.size(); ++i)
    csv += std::to_string(i + 1) + "," + fmt(r.captures[i].first * 1e9) + "," + fmt(r.captures[i].second) + "\n";
  s.file("captures.csv", csv);
  s.json_file("fits.json", {{"captures", json::parse(analysis::decay_json(r.capture_fit))},
                            {"constant_coupling", json::parse(analysis::decay_json(r.revival_fit))}});
  const double t = r.capture_fit.decay_time;
  s.metric("T_saw_us", t * 1e6, "energy decay time fitted to captures after n round trips");
  s.metric("T_saw_stderr_us", r.capture_fit.decay_time_stderr * 1e6, "standard error of T_saw");
  s.metric("alpha_Np_per_m", analysis::loss_from_decay_time(e.setup.channel.velocity, t), "1 / (v T_saw)");
  s.metric("revival_energy_ratio", r.revival_ratio, "mean ratio of successive captured energies");
  s.metric("expected_ratio", std::exp(-e.setup.channel.round_trip() / e.setup.channel.decay_time()),
           "exp(-tau_RT / T_saw) from the configured loss");
  s.metric("constant_coupling_ratio", r.constant_coupling_ratio,
           "energy ratio per round trip with node 1 always coupled; storage in node 1 biases it up");
  s.metric("constant_coupling_T_us", r.revival_fit.decay_time * 1e6, "decay time fitted to the constant-coupling energies");
}

void run_freq_map(const Experiment& e, Sink& s) {
  auto st = e.setup;
  st.branches.bin_steps = e.fm_branch_bin_steps;
  auto f = linspace(e.sweep_start * 1e9, e.sweep_stop * 1e9, e.sweep_steps);
  auto resp = saw::udt_response(e.udt, f, st.exec);
  std::vector<netsim::FreqPoint> pts;
  for (std::size_t i = 0; i < f.size(); ++i) {
    netsim::FreqPoint p;
    p.f = f[i];
    p.kappa1 = std::min(st.kappa_max, e.fm_kappa * resp.kappa_udt[i] / e.udt.kappa_ref);
    p.directivity = saw::directivity_fraction_db(resp.directivity_db[i]);
    cd r = resp.reflection[i];
    if (std::abs(r) > 1) r /= std::abs(r);
    p.r1 = p.r2 = r;
    pts.push_back(p);
  }
  auto m = netsim::freq_map(st, pts, e.fm_t_end, e.fm_sample);
  std::string csv = "f_GHz,t_ns,Pe_Q1\n";
  for (std::size_t i = 0; i < m.f.size(); ++i)
    for (std::size_t k = 0; k < m.times.size(); ++k)
      csv += fmt(m.f[i] * 1e-9) + "," + fmt(m.times[k] * 1e9) + "," + fmt(m.pe_q1[i][k]) + "\n";
  s.file("freq_map.csv", csv);
  std::string rv = "f_GHz,kappa1_MHz,directivity,reflection_mag,revival_contrast,visible\n";
  double lo = 0, hi = 0, best = 0;
  int visible = 0;
  for (std::size_t i = 0; i < m.f.size(); ++i) {
    bool vis = m.revival_contrast[i] > e.fm_revival_threshold;
    rv += fmt(m.f[i] * 1e-9) + "," + fmt(pts[i].kappa1 / (2 * M_PI) * 1e-6) + "," + fmt(pts[i].directivity) + "," +
          fmt(std::abs(pts[i].r1)) + "," + fmt(m.revival_contrast[i]) + "," + (vis ? "1" : "0") + "\n";
    best = std::max(best, m.revival_contrast[i]);
    if (vis) {
      if (!visible) lo = m.f[i];
      hi = m.f[i];
      ++visible;
    }
  }
  s.file("revivals.csv", rv);
  s.metric("visible_points", visible, "sweep points whose revival contrast exceeds the threshold");
  s.metric("max_revival_contrast", best, "largest revival contrast in the sweep");
  if (visible) {
    s.metric("band_low_GHz", lo * 1e-9, "lowest frequency with a visible revival");
    s.metric("band_high_GHz", hi * 1e-9, "highest frequency with a visible revival");
  }
  if (e.plots) {
    Series a{"revival contrast", {}, m.revival_contrast};
    for (double x : m.f) a.x.push_back(x * 1e-9);
    s.file("revivals.svg", svg_plot("Revival contrast vs carrier", "f (GHz)", "contrast", {a}));
  }
}

}  // namespace

RunReport run(const json& cfg, const std::filesystem::path& out_dir) {
  auto diags = validate(cfg);
  for (const auto& d : diags)
    if (d.level == Diagnostic::Level::error) throw SchemaError(d.str());
  const auto t0 = std::chrono::steady_clock::now();
  Experiment e = build_experiment(cfg);
  prepare(e);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw FilesystemError("cannot create " + out_dir.string() + ": " + ec.message());

  RunReport rep;
  rep.config = cfg;
  Sink sink{out_dir, rep};
  if (e.scenario == "transfer")
    run_transfer(e, sink);
  else if (e.scenario == "bell")
    run_bell(e, sink);
  else if (e.scenario == "process-tomo")
    run_process(e, sink);
  else if (e.scenario == "interferometer")
    run_interferometer(e, sink);
  else if (e.scenario == "ramsey-probe")
    run_ramsey(e, sink);
  else if (e.scenario == "loss-characterization")
    run_loss(e, sink);
  else if (e.scenario == "freq-map")
    run_freq_map(e, sink);
  else
    throw SchemaError("unknown scenario " + e.scenario);

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Wall-clock lives outside the manifest so that repeated runs stay byte-identical.
  sink.file("timing.txt", "wall_seconds " + fmt(rep.wall_seconds) + "\n");
  json m;
  m["schema_version"] = kSchemaVersion;
  m["scenario"] = e.scenario;
  m["config"] = cfg;
  m["metrics"] = json::object();
  for (const auto& [k, v] : rep.metrics) m["metrics"][k] = {{"value", v.value}, {"definition", v.definition}};
  auto files = rep.files;
  files.push_back(kManifestName);
  std::sort(files.begin(), files.end());
  m["files"] = files;
  sink.json_file(kManifestName, m);
  return rep;
}

}  // namespace phonon::lab
