#include <cmath>

#include <doctest.h>

#include "phonon/netsim.hpp"

using namespace phonon::netsim;

TEST_SUITE("channel") {
  TEST_CASE("delay and loss of the default link") {
    ChannelParams ch;
    CHECK(ch.delay() == doctest::Approx(2e-3 / 3863.0));
    CHECK(ch.delay() * 1e9 == doctest::Approx(517.7).epsilon(1e-4));
    CHECK(ch.round_trip() * 1e6 == doctest::Approx(1.035).epsilon(1e-3));
    CHECK(ch.transmission() == doctest::Approx(std::exp(-0.346)));
    CHECK(ch.transmission() == doctest::Approx(0.708).epsilon(1e-3));
    CHECK(ch.decay_time() * 1e6 == doctest::Approx(1.496).epsilon(1e-3));
  }

  TEST_CASE("lossless channel never decays") {
    ChannelParams ch;
    ch.loss_alpha = 0;
    CHECK(ch.transmission() == 1.0);
    CHECK(std::isinf(ch.decay_time()));
  }

  TEST_CASE("invalid parameters are rejected") {
    ChannelParams ch;
    ch.length = -1;
    CHECK_THROWS(ch.validate());
    ch.length = 2e-3;
    ch.loss_alpha = -1;
    CHECK_THROWS(ch.validate());
  }

  TEST_CASE("commensurate step divides the delay") {
    ChannelParams ch;
    double dt = commensurate_dt(ch, 1e-9);
    CHECK(dt <= 1e-9);
    CHECK(delay_cells(ch, dt) == 518);
    CHECK(double(delay_cells(ch, dt)) * dt == doctest::Approx(ch.delay()).epsilon(1e-12));
    CHECK_THROWS_AS(delay_cells(ch, 1e-9), EngineError);
  }

  TEST_CASE("node validation") {
    NodeParams n;
    CHECK_NOTHROW(n.validate());
    n.t1 = 10e-6;
    n.t2_ramsey = 25e-6;
    CHECK_THROWS(n.validate());
    n.t2_ramsey = 5e-6;
    n.t2_echo = 8e-6;
    CHECK(n.dephasing_rate() == doctest::Approx(1 / 8e-6 - 1 / 20e-6));
    n.dephasing = DephasingSource::ramsey;
    CHECK(n.dephasing_rate() == doctest::Approx(1 / 5e-6 - 1 / 20e-6));
    n.directivity = 1.5;
    CHECK_THROWS(n.validate());
  }

  TEST_CASE("nearest grid index") {
    Trajectory t;
    t.times = {0, 1, 2, 3};
    CHECK(t.index_of(1.4) == 1);
    CHECK(t.index_of(1.6) == 2);
    CHECK(t.index_of(9) == 3);
    CHECK(t.index_of(-2) == 0);
  }
}
