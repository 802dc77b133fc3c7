#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phonon/parallel.hpp"
#include "phonon/pulseshape.hpp"
#include "phonon/qmath.hpp"

namespace phonon::netsim {

using qmath::cd;
using qmath::DensityMatrix;

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelParams {
  double length = 2e-3;       // m
  double velocity = 3863.0;   // m/s
  double loss_alpha = 173.0;  // Np/m, energy convention

  void validate() const;
  double delay() const { return length / velocity; }
  double round_trip() const { return 2 * delay(); }
  double transmission() const;  // single-pass energy transmission e^{-alpha l}
  // Energy decay time 1 / (alpha v); infinite without loss.
  double decay_time() const;
};

enum class DephasingSource { ramsey, echo };

struct NodeParams {
  double bare_frequency = 0;  // Hz
  double detuning = 0;        // Hz from the carrier
  double t1 = std::numeric_limits<double>::infinity();
  double t2_ramsey = std::numeric_limits<double>::infinity();
  double t2_echo = std::numeric_limits<double>::infinity();
  DephasingSource dephasing = DephasingSource::echo;
  pulse::CouplerSchedule schedule = pulse::off_schedule();
  double directivity = 1.0;  // fraction of emitted energy sent toward the far node
  // Channel-side reflection of the transducer when the wave is not absorbed. Its magnitude
  // fixes the pass-through |t| = sqrt(1 - |r|^2) toward the absorbing outside.
  cd reflection = 1.0;

  void validate() const;
  double decay_rate() const;       // 1 / T1
  double dephasing_rate() const;   // coherence decay rate of the pure-dephasing part
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> pe_q1;
  std::vector<double> pe_q2;
  std::vector<double> field_energy;
  std::vector<DensityMatrix> rho;  // optional, same length as times when present

  std::size_t size() const { return times.size(); }
  // Value at the grid point closest to t.
  std::size_t index_of(double t) const;
};

// Largest dt not above dt_target that fits an integer number of steps into the channel delay.
double commensurate_dt(const ChannelParams& ch, double dt_target);
std::size_t delay_cells(const ChannelParams& ch, double dt);

// ---- Engine A: cascaded master equation for a unidirectional link ----

struct CascadedOptions {
  DensityMatrix q1 = DensityMatrix::adopt(qmath::sigma_plus().mat() * qmath::sigma_minus().mat());  // |e><e|
  DensityMatrix q2 = DensityMatrix::adopt(qmath::sigma_minus().mat() * qmath::sigma_plus().mat());  // |g><g|
  // Sign of the receiver's coupling to the channel. -1 makes emission followed by capture the identity.
  double receiver_polarity = -1.0;
  // Physical times at which the joint two-qubit state is returned.
  std::vector<double> state_times;
  // When the far transducer reflects, node 1 must be silent once its first emission could return.
  bool far_end_reflects = true;
  // Both qubits are prepared at this time; each node is frozen before it. Steps split there.
  double prepare_time = -std::numeric_limits<double>::infinity();
};

struct CascadedResult {
  Trajectory trajectory;
  std::vector<DensityMatrix> states;  // aligned with CascadedOptions::state_times
};

CascadedResult run_cascaded(const NodeParams& node1, const NodeParams& node2, const ChannelParams& channel,
                            const qmath::TimeGrid& grid, const CascadedOptions& opts = {});

// ---- Engine B: single excitation with a discretized field ----

struct ZKick {
  double time = 0;
  int qubit = 1;
  double phase = 0;
};

// Dephasing jumps restart the jumped qubit in |e> with an empty channel, so every restart
// is fixed by (qubit, start step). Jump weight is shared linearly between neighbouring
// nodes of a coarse grid and restarts at the same node are merged.
struct BranchOptions {
  bool enabled = true;
  int bin_steps = 8;            // spacing of restart nodes in time steps
  double min_weight = 1e-9;     // smaller restarts are dropped and counted
  int max_depth = 4;            // deeper restarts evolve without dephasing
};

struct FieldOptions {
  double receiver_polarity = -1.0;
  std::vector<ZKick> kicks;
  BranchOptions branches;
  Exec exec = Exec::parallel;
  std::vector<double> snapshot_times;
  double prepare_time = -std::numeric_limits<double>::infinity();  // as in CascadedOptions
};

struct FieldState {
  double time = 0;
  cd a1, a2;
  std::vector<cd> right;  // right movers, index 0 next to node 1
  std::vector<cd> left;   // left movers, index 0 next to node 1
  double vacuum = 0;      // probability weight outside the excitation manifold of the main branch
};

struct BranchStats {
  std::size_t count = 0;
  int depth = 0;
  double dropped_weight = 0;
};

struct FieldResult {
  Trajectory trajectory;
  cd a1_final, a2_final;  // main (coherent) branch amplitudes at the last step
  double dt = 0;
  std::size_t cells = 0;
  double arrived_q2 = 0;  // excitation that reached node 2, summed over branches
  double arrived_q1 = 0;
  std::vector<FieldState> snapshots;
  BranchStats branches;
};

FieldResult run_single_excitation(const NodeParams& node1, const NodeParams& node2, const ChannelParams& channel,
                                  const qmath::TimeGrid& grid, cd a1_0, cd a2_0, const FieldOptions& opts = {});

}  // namespace phonon::netsim
