#include <cmath>

#include <doctest.h>

#include "phonon/experiments.hpp"

using namespace phonon;
using namespace phonon::netsim;

namespace {

constexpr double kTwoPi = 2 * M_PI;

NodeParams constant_node(double kappa) {
  NodeParams n;
  n.schedule = pulse::constant_schedule(kappa, -1.0, 1.0);
  return n;
}

}  // namespace

TEST_SUITE("cascaded") {
  // Equal constant couplings: a2(t') = kappa t' exp(-kappa t' / 2) times sqrt(eta), t' = t - tau.
  TEST_CASE("constant coupling cascade against the closed form") {
    ChannelParams ch;
    const double k = kTwoPi * 2e6;
    const double dt = commensurate_dt(ch, 1e-9);
    auto grid = grid_ending_at(1.4e-6, dt);
    CascadedOptions o;
    o.far_end_reflects = false;
    auto r = run_cascaded(constant_node(k), constant_node(k), ch, grid, o);
    const auto& tr = r.trajectory;
    for (std::size_t i = 0; i < tr.size(); i += 50) {
      double t = tr.times[i] - grid.t0();
      CHECK(tr.pe_q1[i] == doctest::Approx(std::exp(-k * t)).epsilon(1e-7));
      double tp = t - ch.delay();
      double want = tp > 0 ? ch.transmission() * k * k * tp * tp * std::exp(-k * tp) : 0.0;
      CHECK(tr.pe_q2[i] == doctest::Approx(want).epsilon(1e-6));
    }
  }

  TEST_CASE("in-flight energy closes the balance on a lossless link") {
    ChannelParams ch;
    ch.loss_alpha = 0;
    const double k = kTwoPi * 3e6;
    auto grid = grid_ending_at(1.2e-6, commensurate_dt(ch, 1e-9));
    CascadedOptions o;
    o.far_end_reflects = false;
    auto r = run_cascaded(constant_node(k), NodeParams{}, ch, grid, o);
    const auto& tr = r.trajectory;
    for (std::size_t i = 0; i < tr.size(); i += 97) {
      if (tr.times[i] > ch.delay()) break;
      CHECK(tr.pe_q1[i] + tr.field_energy[i] == doctest::Approx(1.0).epsilon(2e-3));
    }
  }

  TEST_CASE("joint states stay physical with every noise source on") {
    DeviceSetup s;
    auto res = transfer_experiment(Carrier::uni, s);
    CHECK(std::string(res.engine) == "cascaded");
    auto d = DensityMatrix(res.rho_q2);
    CHECK(d.trace() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.min_eigenvalue() >= -1e-6);
  }

  TEST_CASE("returning waves are refused") {
    ChannelParams ch;
    auto grid = grid_ending_at(1.5e-6, commensurate_dt(ch, 1e-9));
    CHECK_THROWS_AS(run_cascaded(constant_node(1e6), NodeParams{}, ch, grid), EngineError);
  }

  TEST_CASE("state times must sit on the grid after the delay") {
    ChannelParams ch;
    const double dt = commensurate_dt(ch, 1e-9);
    auto grid = grid_ending_at(1.0e-6, dt);
    CascadedOptions o;
    o.far_end_reflects = false;
    o.state_times = {100e-9};
    CHECK_THROWS_AS(run_cascaded(constant_node(1e6), NodeParams{}, ch, grid, o), EngineError);
    o.state_times = {grid.t1() - dt / 3};
    CHECK_THROWS_AS(run_cascaded(constant_node(1e6), NodeParams{}, ch, grid, o), EngineError);
  }

  TEST_CASE("ideal transfer with a wide coupler range") {
    DeviceSetup s;
    s.kappa_max = kTwoPi * 500e6;
    s.dt = 0.2e-9;  // RK4 needs kappa dt below about 2.8
    TransferOptions o;
    o.loss = false;
    o.coherence_q1 = o.coherence_q2 = false;
    auto r = transfer_experiment(Carrier::uni, s, o);
    // The capture is read out `settle` after the mode center, so the sech tail is still in flight.
    double tail = 0.5 * (1 - std::tanh(0.5 * s.kappa_c_uni * s.settle_uni));
    CHECK(r.pe_q2 == doctest::Approx(1 - tail).epsilon(1e-3));
  }
}
