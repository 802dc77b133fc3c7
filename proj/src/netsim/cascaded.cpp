#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "phonon/netsim.hpp"

namespace phonon::netsim {

using qmath::CollapseChannel;
using qmath::Mat;
using qmath::Operator;
using qmath::TimeGrid;

namespace {

struct Ops {
  Operator s1, s2, z1, z2, n1, n2;
};

Ops two_qubit_ops() {
  Operator id = Operator::identity(2);
  Ops o;
  o.s1 = qmath::kron(qmath::sigma_minus(), id);
  o.s2 = qmath::kron(id, qmath::sigma_minus());
  o.z1 = qmath::kron(qmath::sigma_z(), id);
  o.z2 = qmath::kron(id, qmath::sigma_z());
  o.n1 = o.s1.adjoint() * o.s1;
  o.n2 = o.s2.adjoint() * o.s2;
  return o;
}

// 1 once the node's own clock has reached the preparation time.
struct Gate {
  double prep, shift;
  double operator()(double t) const { return t + shift >= prep ? 1.0 : 0.0; }
};

// Free evolution of one qubit: total coupler loss, T1, dephasing.
std::vector<CollapseChannel> local_channels(const NodeParams& n, const Operator& s, const Operator& z, Gate on) {
  std::vector<CollapseChannel> c;
  auto sched = n.schedule;
  c.push_back(CollapseChannel::scheduled(s, [sched, on](double t) { return on(t) * sched(t + on.shift); }));
  if (double g = n.decay_rate(); g > 0)
    c.push_back(CollapseChannel::scheduled(s, [g, on](double t) { return on(t) * g; }));
  if (double g = n.dephasing_rate(); g > 0)
    c.push_back(CollapseChannel::scheduled(z, [g, on](double t) { return on(t) * 0.5 * g; }));
  return c;
}

Operator detuning_term(const NodeParams& n, const Operator& z) { return z * cd(-0.5 * 2 * M_PI * n.detuning); }

qmath::Hamiltonian local_hamiltonian(const NodeParams& n, const Operator& z, Gate on) {
  Operator h = detuning_term(n, z);
  return [h, on](double t) { return h * cd(on(t)); };
}

// Schedule breakpoints and the preparation time, moved onto the simulation clock.
std::vector<double> clock_breaks(const NodeParams& n, Gate on) {
  std::vector<double> b;
  for (double x : n.schedule.breaks) b.push_back(x - on.shift);
  if (std::isfinite(on.prep)) b.push_back(on.prep - on.shift);
  return b;
}

}  // namespace

CascadedResult run_cascaded(const NodeParams& node1, const NodeParams& node2, const ChannelParams& channel,
                            const TimeGrid& grid, const CascadedOptions& opts) {
  node1.validate();
  node2.validate();
  channel.validate();
  if (opts.q1.dim() != 2 || opts.q2.dim() != 2) throw EngineError("engine A takes single-qubit initial states");
  const double dt = grid.dt();
  const std::size_t cells = delay_cells(channel, dt);
  const double tau = double(cells) * dt;
  const double t0 = grid.t0();
  const std::size_t steps = grid.steps();

  if (opts.far_end_reflects) {
    // A returning wave would meet an active coupler at node 1; only engine B models that.
    double first = NAN;
    for (std::size_t k = 0; k <= steps; ++k)
      if (node1.schedule(grid.at(k)) > 0) {
        first = grid.at(k);
        break;
      }
    if (!std::isnan(first))
      for (std::size_t k = 0; k <= steps; ++k) {
        double t = grid.at(k);
        if (t >= first + channel.round_trip() && node1.schedule(t) > 0)
          throw EngineError("node 1 couples to the channel after its emission could return; use the field engine");
      }
  }

  const double eta = channel.transmission();
  const double d1 = node1.directivity, d2 = node2.directivity;
  const double pol = opts.receiver_polarity;

  // Node 2 alone until the first wavefront arrives.
  std::vector<double> pe2_pre;
  Mat rho2_arrival;
  {
    Operator sm = qmath::sigma_minus(), sz = qmath::sigma_z();
    const Gate on{opts.prepare_time, 0.0};
    auto grid2 = TimeGrid::with_steps(t0, t0 + tau, cells);
    auto fin = qmath::integrate_me_observed(
        local_hamiltonian(node2, sz, on), local_channels(node2, sm, sz, on), opts.q2, grid2,
        [&](std::size_t, double, const Mat& r) { pe2_pre.push_back(r(1, 1).real()); }, 1e-6, clock_breaks(node2, on));
    rho2_arrival = fin.mat();
  }

  const Ops o = two_qubit_ops();
  auto sk1 = node1.schedule;
  auto sk2 = node2.schedule;
  // Simulation time s is node 1's clock; node 2 runs tau ahead.
  const Gate on1{opts.prepare_time, 0.0}, on2{opts.prepare_time, tau};
  auto k1 = [=](double s) { return on1(s) * sk1(s); };
  auto k2 = [=](double s) { return on2(s) * sk2(s + tau); };
  auto l1 = [=](double s) { return o.s1 * cd(std::sqrt(eta * d1 * k1(s))); };
  auto l2 = [=](double s) { return o.s2 * cd(pol * std::sqrt(d2 * k2(s))); };

  std::vector<CollapseChannel> ch;
  ch.push_back(CollapseChannel::moving([=](double s) { return l1(s) + l2(s); }));
  ch.push_back(CollapseChannel::scheduled(o.s1, [=](double s) { return (1 - eta * d1) * k1(s); }));
  ch.push_back(CollapseChannel::scheduled(o.s2, [=](double s) { return (1 - d2) * k2(s); }));
  for (auto [n, sm, z, on] : {std::tuple{&node1, o.s1, o.z1, on1}, std::tuple{&node2, o.s2, o.z2, on2}}) {
    if (double g = n->decay_rate(); g > 0)
      ch.push_back(CollapseChannel::scheduled(sm, [g, on](double s) { return on(s) * g; }));
    if (double g = n->dephasing_rate(); g > 0)
      ch.push_back(CollapseChannel::scheduled(z, [g, on](double s) { return on(s) * 0.5 * g; }));
  }

  const Operator h1 = detuning_term(node1, o.z1), h2 = detuning_term(node2, o.z2);
  qmath::Hamiltonian h = [=](double s) {
    Operator a = l1(s), b = l2(s);
    // Series product: H = (1 / 2i) (L2^dag L1 - L1^dag L2)
    Operator c = (b.adjoint() * a - a.adjoint() * b) * cd(0, -0.5);
    return h1 * cd(on1(s)) + h2 * cd(on2(s)) + c;
  };

  // Requested joint states need the simulation state tau earlier.
  std::map<std::size_t, Mat> wanted;
  std::vector<std::size_t> state_idx;
  for (double t : opts.state_times) {
    double kf = (t - t0) / dt;
    auto k = static_cast<std::size_t>(std::llround(kf));
    if (std::abs(kf - double(k)) > 1e-6 || k > steps) throw EngineError("state time is not on the simulation grid");
    if (k < cells) throw EngineError("joint states are available only after the channel delay");
    state_idx.push_back(k);
    wanted[k - cells] = Mat();
  }

  Trajectory tr;
  tr.times.resize(steps + 1);
  tr.pe_q1.resize(steps + 1);
  tr.pe_q2.resize(steps + 1);
  tr.field_energy.assign(steps + 1, 0.0);
  std::vector<double> flux(steps + 1, 0.0);
  const Mat n1 = o.n1.mat(), n2 = o.n2.mat();
  Mat rho0 = qmath::kron(opts.q1.mat(), rho2_arrival);
  std::vector<double> breaks = clock_breaks(node1, on1);
  for (double b : clock_breaks(node2, on2)) breaks.push_back(b);
  qmath::integrate_me_observed(h, ch, DensityMatrix::adopt(rho0), grid, [&](std::size_t k, double s, const Mat& r) {
    double p1 = (n1 * r).trace().real();
    double p2 = (n2 * r).trace().real();
    tr.pe_q1[k] = p1;
    flux[k] = d1 * k1(s) * p1;
    if (k + cells <= steps) tr.pe_q2[k + cells] = p2;
    auto it = wanted.find(k);
    if (it != wanted.end()) it->second = r;
  }, 1e-6, breaks);
  for (std::size_t k = 0; k <= steps; ++k) {
    tr.times[k] = grid.at(k);
    if (k < cells) tr.pe_q2[k] = pe2_pre[k];
  }
  // In-flight energy, attenuated along the way.
  const double cell_loss = std::exp(-channel.loss_alpha * channel.velocity * dt);
  const double full_loss = std::pow(cell_loss, double(cells));
  double e = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    e = e * cell_loss + 0.5 * (flux[k] + flux[k - 1]) * dt;
    if (k > cells) e -= 0.5 * (flux[k - cells] + flux[k - cells - 1]) * dt * full_loss;
    tr.field_energy[k] = std::max(0.0, e);
  }

  CascadedResult out;
  out.trajectory = std::move(tr);
  // Node 1 catches up by evolving alone over the last tau.
  for (std::size_t k : state_idx) {
    std::size_t ks = k - cells;
    auto g1 = TimeGrid::with_steps(grid.at(ks), grid.at(k), cells);
    auto fin = qmath::integrate_me_observed(local_hamiltonian(node1, o.z1, on1), local_channels(node1, o.s1, o.z1, on1),
                                            DensityMatrix::adopt(wanted.at(ks)), g1, nullptr, 1e-6,
                                            clock_breaks(node1, on1));
    out.states.push_back(DensityMatrix::adopt(fin.mat()));
  }
  return out;
}

}  // namespace phonon::netsim
