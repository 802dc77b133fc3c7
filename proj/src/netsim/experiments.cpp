#include "phonon/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace phonon::netsim {

using qmath::Mat;
using qmath::TimeGrid;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void strip_coherence(NodeParams& n) {
  n.t1 = n.t2_ramsey = n.t2_echo = kInf;
}

pulse::TemporalMode emitted_mode(const DeviceSetup& s, Carrier c, double norm) {
  double kc = c == Carrier::uni ? s.kappa_c_uni : s.kappa_c_bi;
  double center = c == Carrier::uni ? s.emission_center_uni : s.emission_center_bi;
  auto m = pulse::sech_mode(kc, norm, center, s.mode_truncation);
  return m.clipped(0.0, m.t_end());
}

DensityMatrix as_state(const Mat& m) { return DensityMatrix::adopt(qmath::project_to_density(qmath::hermitize(m))); }

FieldOptions field_options(const DeviceSetup& s, Exec exec) {
  FieldOptions o;
  o.branches = s.branches;
  o.exec = exec;
  o.prepare_time = 0.0;
  return o;
}

}  // namespace

NodeParams DeviceSetup::node(int which, Carrier c) const {
  const Coherence& k = c == Carrier::uni ? (which == 1 ? uni_q1 : uni_q2) : (which == 1 ? bi_q1 : bi_q2);
  NodeParams n;
  n.bare_frequency = c == Carrier::uni ? f_uni : f_bi;
  n.t1 = k.t1;
  n.t2_ramsey = k.t2_ramsey;
  n.t2_echo = k.t2_echo;
  n.dephasing = dephasing;
  n.directivity = c == Carrier::uni ? directivity_uni : directivity_bi;
  n.reflection = c == Carrier::uni ? cd(1.0) : cd(0.0);
  return n;
}

NodeParams DeviceSetup::idle_node(int which) const {
  const Coherence& k = which == 1 ? idle_q1 : idle_q2;
  NodeParams n;
  n.t1 = k.t1;
  n.t2_ramsey = k.t2_ramsey;
  n.t2_echo = k.t2_echo;
  n.dephasing = dephasing;
  return n;
}

TimeGrid grid_ending_at(double t_end, double dt) {
  if (!(t_end > 0)) throw std::invalid_argument("simulation end must be positive");
  double k = std::ceil(t_end / dt - 1e-9);
  return TimeGrid::with_steps(t_end - k * dt, t_end, std::size_t(k));
}

pulse::CouplerSchedule combine(const pulse::CouplerSchedule& a, const pulse::CouplerSchedule& b) {
  pulse::CouplerSchedule s;
  auto ka = a.kappa, kb = b.kappa;
  s.kappa = [ka, kb](double t) { return ka(t) + kb(t); };
  s.kappa_max = std::max(a.kappa_max, b.kappa_max);
  s.direction = a.direction;
  s.t_start = std::min(a.t_start, b.t_start);
  s.t_end = std::max(a.t_end, b.t_end);
  s.capped = a.capped || b.capped;
  s.capped_time = a.capped ? a.capped_time : b.capped_time;
  s.peak_kappa = std::max(a.peak_kappa, b.peak_kappa);
  s.breaks = a.breaks;
  s.breaks.insert(s.breaks.end(), b.breaks.begin(), b.breaks.end());
  std::sort(s.breaks.begin(), s.breaks.end());
  return s;
}

// ---- Transfer ----

TransferResult transfer_experiment(Carrier carrier, const DeviceSetup& setup, const TransferOptions& opts) {
  ChannelParams ch = setup.channel;
  if (!opts.loss) ch.loss_alpha = 0;
  const double dt = setup.grid_dt();
  const double tau = ch.delay();
  const double norm2 = std::norm(opts.alpha) + std::norm(opts.beta);
  if (std::abs(norm2 - 1) > 1e-9) throw std::invalid_argument("input state is not normalized");

  NodeParams n1 = setup.node(1, carrier), n2 = setup.node(2, carrier);
  if (!opts.coherence_q1) strip_coherence(n1);
  if (!opts.coherence_q2) strip_coherence(n2);
  auto mode = emitted_mode(setup, carrier, 1.0);
  n1.schedule = pulse::emission_schedule(mode, setup.kappa_max, 1.0);
  n2.schedule = pulse::capture_schedule(mode.delayed(tau), setup.kappa_max, 0.0);

  const double center = carrier == Carrier::uni ? setup.emission_center_uni : setup.emission_center_bi;
  const double settle = carrier == Carrier::uni ? setup.settle_uni : setup.settle_bi;
  TransferResult r;
  r.t_analysis = center + tau + settle;
  r.emission_capped = n1.schedule.capped;
  r.capture_capped = n2.schedule.capped;
  auto grid = grid_ending_at(r.t_analysis, dt);

  if (carrier == Carrier::uni) {
    CascadedOptions co;
    qmath::Vec psi(2);
    psi << opts.alpha, opts.beta;
    co.q1 = DensityMatrix::pure(psi);
    co.state_times = {r.t_analysis};
    co.prepare_time = 0.0;
    auto res = run_cascaded(n1, n2, ch, grid, co);
    r.trajectory = std::move(res.trajectory);
    r.rho_q2 = qmath::partial_trace(res.states.at(0), 2).mat();
    r.engine = "cascaded";
  } else {
    auto res = run_single_excitation(n1, n2, ch, grid, 1.0, 0.0, field_options(setup, setup.exec));
    r.trajectory = std::move(res.trajectory);
    r.coherent_amplitude = res.a2_final;
    // Linearity in the input: |g> stays put, |e> maps to the single-excitation result.
    const double p = r.trajectory.pe_q2.back();
    const double b2 = std::norm(opts.beta);
    Mat m(2, 2);
    m(0, 0) = 1 - b2 * p;
    m(1, 1) = b2 * p;
    m(1, 0) = opts.beta * res.a2_final * std::conj(opts.alpha);
    m(0, 1) = std::conj(m(1, 0));
    r.rho_q2 = m;
    r.engine = "field";
  }
  r.pe_q2 = r.rho_q2(1, 1).real();
  return r;
}

LossBudget transfer_loss_budget(const DeviceSetup& setup) {
  struct Cfg {
    bool loss, c1, c2;
  };
  const Cfg cfgs[6] = {{true, true, true},   {false, true, true}, {false, false, false},
                       {true, false, false}, {false, true, false}, {false, false, true}};
  double pe[6];
  for_each_index(6, setup.exec, [&](std::size_t i) {
    TransferOptions o;
    o.loss = cfgs[i].loss;
    o.coherence_q1 = cfgs[i].c1;
    o.coherence_q2 = cfgs[i].c2;
    pe[i] = transfer_experiment(Carrier::uni, setup, o).pe_q2;
  });
  LossBudget b;
  b.nominal = pe[0];
  b.lossless = pe[1];
  b.ideal = pe[2];
  b.loss_only = pe[3];
  b.loss_penalty = b.lossless - b.nominal;
  b.coherence_penalty = b.ideal - b.lossless;
  b.q1_penalty = b.ideal - pe[4];
  b.q2_penalty = b.ideal - pe[5];
  return b;
}

// ---- Process tomography ----

ProcessResult process_experiment(Carrier carrier, const DeviceSetup& setup, tomo::Readout readout,
                                 const Eigen::Matrix2d& v, bool virtual_z) {
  const auto inputs = tomo::process_inputs();
  std::array<Mat, 4> raw;
  auto amplitudes = [&](int i) {
    // Inputs are pure; recover (alpha, beta) from the density matrix.
    const Mat& m = inputs[std::size_t(i)].mat();
    double pg = m(0, 0).real(), pe = m(1, 1).real();
    cd alpha = std::sqrt(pg);
    cd beta = pg > 0 ? m(1, 0) / std::sqrt(pg) : cd(std::sqrt(pe));
    return std::pair{alpha, beta};
  };
  if (carrier == Carrier::uni) {
    DeviceSetup inner = setup;
    inner.exec = Exec::serial;
    for_each_index(4, setup.exec, [&](std::size_t i) {
      auto [a, b] = amplitudes(int(i));
      TransferOptions o;
      o.alpha = a;
      o.beta = b;
      raw[i] = transfer_experiment(carrier, inner, o).rho_q2;
    });
  } else {
    auto base = transfer_experiment(carrier, setup);
    const double p = base.pe_q2;
    for (int i = 0; i < 4; ++i) {
      auto [a, b] = amplitudes(i);
      Mat m(2, 2);
      m(0, 0) = 1 - std::norm(b) * p;
      m(1, 1) = std::norm(b) * p;
      m(1, 0) = b * base.coherent_amplitude * std::conj(a);
      m(0, 1) = std::conj(m(1, 0));
      raw[std::size_t(i)] = m;
    }
  }
  if (virtual_z) {
    // Undo the deterministic phase of the transferred coherence with a software z rotation.
    double th = std::arg(raw[2](1, 0));
    for (auto& m : raw) {
      m(1, 0) *= std::polar(1.0, -th);
      m(0, 1) = std::conj(m(1, 0));
    }
  }
  ProcessResult out;
  for (std::size_t i = 0; i < 4; ++i) {
    out.transferred[i] = as_state(raw[i]);
    out.outputs[i] = tomo::single_qubit_tomography(out.transferred[i], v, readout);
  }
  out.chi = tomo::process_tomography(out.outputs);
  out.fidelity = tomo::process_fidelity(out.chi, tomo::ChiMatrix::identity());
  out.distance_to_ideal = tomo::chi_trace_distance(out.chi, tomo::ChiMatrix::identity());
  return out;
}

// ---- Bell state ----

namespace {

struct BellSetup {
  NodeParams n1, n2;
  ChannelParams ch;
};

BellSetup bell_nodes(const DeviceSetup& setup, bool ideal) {
  BellSetup b{setup.node(1, Carrier::uni), setup.node(2, Carrier::uni), setup.channel};
  if (ideal) {
    strip_coherence(b.n1);
    strip_coherence(b.n2);
    b.ch.loss_alpha = 0;
  }
  auto half = emitted_mode(setup, Carrier::uni, 0.5);
  b.n1.schedule = pulse::emission_schedule(half, setup.kappa_max, 1.0);
  b.n2.schedule = pulse::capture_schedule(half.delayed(b.ch.delay()), setup.kappa_max, 0.0);
  return b;
}

}  // namespace

BellResult bell_experiment(const DeviceSetup& setup, const BellOptions& opts) {
  auto b = bell_nodes(setup, opts.ideal);
  auto grid = grid_ending_at(setup.t_m, setup.grid_dt());
  CascadedOptions co;
  co.state_times = {setup.t_m};
  co.prepare_time = 0.0;
  auto res = run_cascaded(b.n1, b.n2, b.ch, grid, co);
  BellResult r;
  r.trajectory = std::move(res.trajectory);
  r.rho = as_state(res.states.at(0).mat());
  r.t_m = setup.t_m;
  r.fidelity = tomo::bell_fidelity(r.rho);
  r.best_phase = tomo::best_bell_phase(r.rho);
  r.concurrence = tomo::concurrence(r.rho);
  return r;
}

Trajectory bell_populations_field(const DeviceSetup& setup, bool ideal) {
  auto b = bell_nodes(setup, ideal);
  auto grid = grid_ending_at(setup.t_m, setup.grid_dt());
  return run_single_excitation(b.n1, b.n2, b.ch, grid, 1.0, 0.0, field_options(setup, setup.exec)).trajectory;
}

// ---- Dispersive probes ----

InterferometerResult interferometer_experiment(const DeviceSetup& setup, double reflection_phase,
                                               const std::vector<double>& phis, bool ideal, Exec sweep_exec) {
  if (phis.size() < 3) throw std::invalid_argument("interferometer sweep needs at least three phases");
  ChannelParams ch = setup.channel;
  NodeParams n1 = setup.node(1, Carrier::uni);
  n1.dephasing = setup.interferometer_dephasing;
  NodeParams n2 = setup.idle_node(2);
  if (ideal) {
    ch.loss_alpha = 0;
    strip_coherence(n1);
  }
  n2.reflection = std::polar(1.0, reflection_phase);
  auto half = emitted_mode(setup, Carrier::uni, 0.5);
  auto emit = pulse::emission_schedule(half, setup.kappa_max, 1.0);
  // Node 1 still holds half the excitation when the echo arrives.
  auto cap = pulse::capture_schedule(half.delayed(ch.round_trip()), setup.kappa_max, 0.5);
  n1.schedule = combine(emit, cap);
  n1.reflection = 1.0;

  InterferometerResult r;
  r.t_end = cap.t_end;
  auto grid = grid_ending_at(r.t_end, setup.grid_dt());
  r.samples.resize(phis.size());
  for_each_index(phis.size(), sweep_exec, [&](std::size_t i) {
    FieldOptions o = field_options(setup, Exec::serial);
    o.kicks = {{setup.emission_center_uni + ch.delay(), 1, phis[i]}};
    auto res = run_single_excitation(n1, n2, ch, grid, 1.0, 0.0, o);
    r.samples[i] = {phis[i], res.trajectory.pe_q1.back()};
  });
  r.fit = analysis::fit_cosine(r.samples);
  return r;
}

RamseyResult ramsey_probe_experiment(const DeviceSetup& setup, const std::vector<double>& thetas, bool q1_excited,
                                     const RamseyOptions& opts, Exec sweep_exec) {
  if (thetas.size() < 3) throw std::invalid_argument("Ramsey sweep needs at least three phases");
  if (!(opts.window > 0)) throw std::invalid_argument("interaction window must be positive");
  RamseyResult r;
  if (q1_excited) {
    // How much of the emitted phonon reaches node 2.
    NodeParams n1 = setup.node(1, Carrier::uni);
    auto mode = emitted_mode(setup, Carrier::uni, 1.0);
    n1.schedule = pulse::emission_schedule(mode, setup.kappa_max, 1.0);
    NodeParams n2 = setup.idle_node(2);
    n2.reflection = 0.0;
    auto grid = grid_ending_at(mode.t_end() + setup.channel.delay() + 10e-9, setup.grid_dt());
    r.arrival_probability =
        run_single_excitation(n1, n2, setup.channel, grid, 1.0, 0.0, field_options(setup, setup.exec)).arrived_q2;
  }
  NodeParams q2 = setup.idle_node(2);
  std::vector<qmath::CollapseChannel> ch;
  if (opts.coupler_on && opts.leak_rate > 0) ch.push_back(qmath::CollapseChannel::constant(qmath::sigma_minus(), opts.leak_rate));
  if (q2.decay_rate() > 0) ch.push_back(qmath::CollapseChannel::constant(qmath::sigma_minus(), q2.decay_rate()));
  if (q2.dephasing_rate() > 0)
    ch.push_back(qmath::CollapseChannel::constant(qmath::sigma_z(), 0.5 * q2.dephasing_rate()));
  const double shift = opts.coupler_on ? opts.shift_phase / opts.window : 0.0;
  const auto h_on = qmath::static_hamiltonian(qmath::projector(1, 2) * cd(shift));
  const auto h_off = qmath::static_hamiltonian(qmath::Operator::zero(2));
  auto steps = std::size_t(std::max(1.0, std::ceil(opts.window / setup.dt - 1e-9)));
  auto grid = TimeGrid::with_steps(0.0, opts.window, steps);
  qmath::Vec plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);

  r.samples.resize(thetas.size());
  const double p = r.arrival_probability;
  for_each_index(thetas.size(), sweep_exec, [&](std::size_t i) {
    qmath::Vec psi(2);
    psi << 1 / std::sqrt(2.0), std::polar(1 / std::sqrt(2.0), thetas[i]);
    auto rho0 = DensityMatrix::pure(psi);
    // Readout after an analysis pulse that maps |+> to |e>.
    auto pe = [&](const qmath::Hamiltonian& h) {
      auto fin = qmath::integrate_me_observed(h, ch, rho0, grid, nullptr);
      return (plus.adjoint() * fin.mat() * plus)(0, 0).real();
    };
    double off = pe(h_off);
    double val = q1_excited ? p * pe(h_on) + (1 - p) * off : off;
    r.samples[i] = {thetas[i], val};
  });
  r.fit = analysis::fit_cosine(r.samples);
  return r;
}

// ---- Channel loss ----

LossCharacterization loss_characterization(const DeviceSetup& setup, int round_trips, Exec sweep_exec) {
  if (round_trips < 2) throw std::invalid_argument("loss fit needs at least two round trips");
  const double dt = setup.grid_dt();
  const double trt = setup.channel.round_trip();
  LossCharacterization out;
  NodeParams base = setup.node(1, Carrier::uni);
  NodeParams far = setup.idle_node(2);
  far.reflection = 1.0;
  auto mode = emitted_mode(setup, Carrier::uni, 1.0);
  auto emit = pulse::emission_schedule(mode, setup.kappa_max, 1.0);

  out.captures.resize(std::size_t(round_trips));
  for_each_index(std::size_t(round_trips), sweep_exec, [&](std::size_t i) {
    double n = double(i + 1);
    NodeParams n1 = base;
    auto cap = pulse::capture_schedule(mode.delayed(n * trt), setup.kappa_max, 0.0);
    n1.schedule = combine(emit, cap);
    auto grid = grid_ending_at(cap.t_end, dt);
    auto res = run_single_excitation(n1, far, setup.channel, grid, 1.0, 0.0, field_options(setup, Exec::serial));
    out.captures[i] = {n * trt, res.trajectory.pe_q1.back()};
  });
  out.capture_fit = analysis::fit_exponential_decay(out.captures);

  // Constant coupling: the excitation bounces between node 1 and the far reflector.
  NodeParams n1 = base;
  const double t_end = (round_trips + 0.5) * trt + 20e-9;
  n1.schedule = pulse::constant_schedule(setup.kappa_revival, 0.0, t_end + 1e-9);
  auto grid = grid_ending_at(t_end, dt);
  out.revival = run_single_excitation(n1, far, setup.channel, grid, 1.0, 0.0, field_options(setup, setup.exec)).trajectory;
  const Trajectory& tr = out.revival;
  for (int n = 0; n < round_trips; ++n) {
    double t = (n + 0.5) * trt;
    std::size_t k = tr.index_of(t);
    out.energies.push_back({tr.times[k], tr.pe_q1[k] + tr.pe_q2[k] + tr.field_energy[k]});
  }
  out.revival_fit = analysis::fit_exponential_decay(out.energies);
  auto mean_ratio = [](const std::vector<std::pair<double, double>>& v) {
    double sum = 0;
    for (std::size_t i = 1; i < v.size(); ++i) sum += v[i].second / v[i - 1].second;
    return sum / double(v.size() - 1);
  };
  out.revival_ratio = mean_ratio(out.captures);
  out.constant_coupling_ratio = mean_ratio(out.energies);
  for (int n = 1; n <= round_trips; ++n) {
    std::size_t lo = tr.index_of(n * trt - 100e-9), hi = tr.index_of(std::min(n * trt + 400e-9, tr.times.back()));
    std::size_t best = lo;
    for (std::size_t k = lo; k <= hi; ++k)
      if (tr.pe_q1[k] > tr.pe_q1[best]) best = k;
    out.revival_peak_times.push_back(tr.times[best]);
  }
  return out;
}

// ---- Frequency map ----

double revival_contrast(const Trajectory& t, double round_trip) {
  if (t.times.empty() || t.times.back() < round_trip + 400e-9)
    throw std::invalid_argument("trajectory too short for the revival window");
  std::size_t a = t.index_of(round_trip - 300e-9), b = t.index_of(round_trip), c = t.index_of(round_trip + 400e-9);
  double floor = *std::min_element(t.pe_q1.begin() + long(a), t.pe_q1.begin() + long(b) + 1);
  double peak = *std::max_element(t.pe_q1.begin() + long(b), t.pe_q1.begin() + long(c) + 1);
  return peak - floor;
}

FreqMapResult freq_map(const DeviceSetup& setup, const std::vector<FreqPoint>& points, double t_end,
                       double sample_every, Exec sweep_exec) {
  if (points.empty()) throw std::invalid_argument("frequency map needs at least one point");
  if (!(sample_every > 0)) throw std::invalid_argument("sample spacing must be positive");
  auto grid = grid_ending_at(t_end, setup.grid_dt());
  const auto stride = std::size_t(std::max(1.0, std::round(sample_every / grid.dt())));
  FreqMapResult out;
  for (std::size_t k = 0; k <= grid.steps(); k += stride) out.times.push_back(grid.at(k));
  out.f.resize(points.size());
  out.pe_q1.resize(points.size());
  out.revival_contrast.resize(points.size());
  for_each_index(points.size(), sweep_exec, [&](std::size_t i) {
    const FreqPoint& p = points[i];
    NodeParams n1 = setup.node(1, Carrier::uni);
    n1.bare_frequency = p.f;
    n1.directivity = p.directivity;
    n1.reflection = p.r1;
    n1.schedule = pulse::constant_schedule(p.kappa1, 0.0, t_end + 1e-9);
    NodeParams n2 = setup.idle_node(2);
    n2.reflection = p.r2;
    auto res = run_single_excitation(n1, n2, setup.channel, grid, 1.0, 0.0, field_options(setup, Exec::serial));
    out.f[i] = p.f;
    auto& row = out.pe_q1[i];
    for (std::size_t k = 0; k <= grid.steps(); k += stride) row.push_back(res.trajectory.pe_q1[k]);
    out.revival_contrast[i] = revival_contrast(res.trajectory, setup.channel.round_trip());
  });
  return out;
}

}  // namespace phonon::netsim
