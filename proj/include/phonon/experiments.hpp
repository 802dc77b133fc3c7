#pragma once

#include <array>
#include <utility>
#include <vector>

#include "phonon/analysis.hpp"
#include "phonon/netsim.hpp"
#include "phonon/tomo.hpp"

namespace phonon::netsim {

enum class Carrier { uni, bi };

struct Coherence {
  double t1, t2_ramsey, t2_echo;
};

// Device and protocol settings shared by all scenarios. Rates in rad/s, times in s, frequencies in Hz.
struct DeviceSetup {
  ChannelParams channel;
  Coherence uni_q1{51e-6, 0.79e-6, 2.48e-6};
  Coherence uni_q2{33e-6, 0.55e-6, 2.26e-6};
  Coherence bi_q1{38e-6, 0.95e-6, 2.48e-6};
  Coherence bi_q2{31e-6, 0.62e-6, 1.68e-6};
  Coherence idle_q1{57e-6, 1.11e-6, 3.8e-6};
  Coherence idle_q2{38e-6, 0.88e-6, 3.3e-6};
  DephasingSource dephasing = DephasingSource::echo;
  // Node 1 idles in a superposition for a round trip without refocusing.
  DephasingSource interferometer_dephasing = DephasingSource::ramsey;

  double f_uni = 3.976e9;
  double f_bi = 4.102e9;
  double kappa_c_uni = 2 * M_PI * 10e6;
  double kappa_c_bi = 2 * M_PI * 6e6;
  double kappa_max = pulse::kDefaultKappaMax;
  double mode_truncation = 1e-4;
  double emission_center_uni = 120e-9;
  double emission_center_bi = 200e-9;
  double settle_uni = 90e-9;   // transfer read out this long after the capture center
  double settle_bi = 150e-9;
  double directivity_uni = 1.0;
  double directivity_bi = 0.5;
  double t_m = 725e-9;
  double dt = 1e-9;
  double kappa_revival = 2 * M_PI * 2.4e6;

  BranchOptions branches;
  Exec exec = Exec::parallel;

  NodeParams node(int which, Carrier c) const;
  NodeParams idle_node(int which) const;
  double grid_dt() const { return commensurate_dt(channel, dt); }
};

// Grid of step dt whose last point is exactly t_end; the first point sits at or just before 0.
qmath::TimeGrid grid_ending_at(double t_end, double dt);

pulse::CouplerSchedule combine(const pulse::CouplerSchedule& a, const pulse::CouplerSchedule& b);

// ---- Transfer ----

struct TransferOptions {
  bool loss = true;
  bool coherence_q1 = true;
  bool coherence_q2 = true;
  cd alpha = 0.0;  // input alpha|g> + beta|e> on node 1
  cd beta = 1.0;
};

struct TransferResult {
  Trajectory trajectory;
  double t_analysis = 0;
  double pe_q2 = 0;
  qmath::Mat rho_q2;  // node 2 state at the analysis time
  cd coherent_amplitude;  // main-branch node 2 amplitude (field engine only)
  const char* engine = "";
  bool emission_capped = false;
  bool capture_capped = false;
};

TransferResult transfer_experiment(Carrier carrier, const DeviceSetup& setup, const TransferOptions& opts = {});

struct LossBudget {
  double nominal = 0;        // loss and coherence on
  double lossless = 0;       // eta = 1, coherence on
  double ideal = 0;          // eta = 1, no decoherence
  double loss_only = 0;      // no decoherence, loss on
  double loss_penalty = 0;       // lossless - nominal
  double coherence_penalty = 0;  // ideal - lossless
  double q1_penalty = 0;     // coherence penalty with only node 1 decohering
  double q2_penalty = 0;
};

LossBudget transfer_loss_budget(const DeviceSetup& setup);

// ---- Process tomography ----

struct ProcessResult {
  tomo::ChiMatrix chi = tomo::ChiMatrix::identity();
  double fidelity = 0;
  double distance_to_ideal = 0;
  std::array<DensityMatrix, 4> transferred;  // node 2 states before readout
  std::array<DensityMatrix, 4> outputs;      // after the readout model
};

ProcessResult process_experiment(Carrier carrier, const DeviceSetup& setup, tomo::Readout readout = tomo::Readout::ideal,
                                 const Eigen::Matrix2d& v = Eigen::Matrix2d::Identity(), bool virtual_z = true);

// ---- Bell state ----

struct BellOptions {
  bool ideal = false;  // lossless channel, no decoherence
};

struct BellResult {
  Trajectory trajectory;
  DensityMatrix rho;
  double t_m = 0;
  double fidelity = 0;     // maximized over the Bell phase
  double best_phase = 0;
  double concurrence = 0;
};

BellResult bell_experiment(const DeviceSetup& setup, const BellOptions& opts = {});

// Same protocol on the field engine; used to cross-check engine A.
Trajectory bell_populations_field(const DeviceSetup& setup, bool ideal);

// ---- Dispersive probes ----

struct InterferometerResult {
  std::vector<std::pair<double, double>> samples;  // (phi, Pe_Q1)
  analysis::FringeFit fit;
  double t_end = 0;
};

// reflection_phase: extra phase picked up at node 2 (2 pi chi dt when Q2 is excited).
InterferometerResult interferometer_experiment(const DeviceSetup& setup, double reflection_phase,
                                               const std::vector<double>& phis, bool ideal = false,
                                               Exec sweep_exec = Exec::parallel);

struct RamseyOptions {
  double shift_phase = 0;   // 2 pi chi dt accumulated while the phonon passes
  double window = 190e-9;
  double leak_rate = 0;     // node 2 decay into the channel while its coupler is on, rad/s
  bool coupler_on = true;
};

struct RamseyResult {
  std::vector<std::pair<double, double>> samples;  // (theta, Pe_Q2)
  analysis::FringeFit fit;
  double arrival_probability = 0;
};

RamseyResult ramsey_probe_experiment(const DeviceSetup& setup, const std::vector<double>& thetas, bool q1_excited,
                                     const RamseyOptions& opts, Exec sweep_exec = Exec::parallel);

// ---- Channel loss ----

struct LossCharacterization {
  std::vector<std::pair<double, double>> captures;   // (n tau_RT, Pe_Q1 after capture)
  analysis::DecayFit capture_fit;
  Trajectory revival;                                // constant coupling, reflecting ends
  std::vector<std::pair<double, double>> energies;   // (sample time, total excitation)
  analysis::DecayFit revival_fit;
  double revival_ratio = 0;            // mean ratio of successive captured energies
  double constant_coupling_ratio = 0;  // same from the constant-coupling run; node 1 storage biases it up
  std::vector<double> revival_peak_times;
};

LossCharacterization loss_characterization(const DeviceSetup& setup, int round_trips = 4,
                                           Exec sweep_exec = Exec::parallel);

// ---- Frequency map ----

struct FreqPoint {
  double f = 0;
  double kappa1 = 0;
  double directivity = 1;
  cd r1 = 1.0, r2 = 1.0;
};

struct FreqMapResult {
  std::vector<double> f;
  std::vector<double> times;                 // shared sample times
  std::vector<std::vector<double>> pe_q1;    // [frequency][time]
  std::vector<double> revival_contrast;
};

// Revival rise of Pe_Q1 after one round trip.
double revival_contrast(const Trajectory& t, double round_trip);

FreqMapResult freq_map(const DeviceSetup& setup, const std::vector<FreqPoint>& points, double t_end,
                       double sample_every, Exec sweep_exec = Exec::parallel);

}  // namespace phonon::netsim
