#include <cmath>

#include <doctest.h>

#include "phonon/pulseshape.hpp"

using namespace phonon::pulse;

namespace {

constexpr double kTwoPi = 2 * 3.14159265358979323846;

double integrate_intensity(const TemporalMode& m, double dt) {
  double s = 0;
  for (double t = m.t_start(); t < m.t_end(); t += dt) s += m.intensity(t + dt / 2) * dt;
  return s;
}

}  // namespace

TEST_SUITE("pulseshape") {
  TEST_CASE("sech width") {
    const double k = kTwoPi * 10e6;
    CHECK(sech_fwhm(k) * k == doctest::Approx(4 * std::acosh(2.0)));
    CHECK(sech_fwhm(k) * k == doctest::Approx(5.268).epsilon(1e-3));
    auto m = sech_mode(k, 1.0, 200e-9);
    CHECK(m.amplitude_fwhm() == doctest::Approx(sech_fwhm(k)).epsilon(1e-6));
  }

  TEST_CASE("modes are normalized and truncated") {
    auto m = sech_mode(kTwoPi * 6e6, 0.5, 300e-9);
    CHECK(integrate_intensity(m, 0.01e-9) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m.cumulative(m.t_end()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.cumulative(300e-9) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(std::abs(m.amplitude(m.t_start() - 1e-9)) == 0.0);
    double peak = std::abs(m.amplitude(300e-9));
    CHECK(std::abs(m.amplitude(m.t_start() + 1e-15)) / peak == doctest::Approx(1e-4).epsilon(1e-3));
  }

  TEST_CASE("delay, reversal and clipping") {
    auto m = sech_mode(kTwoPi * 10e6, 1.0, 100e-9);
    auto d = m.delayed(50e-9);
    CHECK(std::abs(d.amplitude(170e-9) - m.amplitude(120e-9)) < 1e-9);
    auto r = m.reversed(100e-9);
    CHECK(std::abs(r.amplitude(80e-9) - m.amplitude(120e-9)) < 1e-6);
    auto c = m.clipped(60e-9, 140e-9);
    CHECK(c.cumulative(c.t_end()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.t_start() == doctest::Approx(60e-9));
  }

  TEST_CASE("emission reproduces the target mode") {
    const double k = kTwoPi * 10e6;
    auto m = sech_mode(k, 1.0, 120e-9);
    auto s = emission_schedule(m, kTwoPi * 500e6);
    // Only the truncated tail, where the remaining population vanishes, hits the cap.
    CHECK(s.capped_time < 1e-3 * (m.t_end() - m.t_start()));
    const double dt = 0.05e-9;
    auto run = simulate_node(s, 1.0, [](double) { return cd(0); }, m.t_start(), m.t_end(), dt);
    cd ov = 0;
    double no = 0;
    for (std::size_t i = 0; i < run.t.size(); ++i) {
      ov += std::conj(m.amplitude(run.t[i])) * run.out[i] * dt;
      no += std::norm(run.out[i]) * dt;
    }
    cd ph = ov / std::abs(ov);
    double err = 0;
    for (std::size_t i = 0; i < run.t.size(); ++i) err += std::norm(run.out[i] - ph * m.amplitude(run.t[i])) * dt;
    CHECK(std::sqrt(err) < 1e-3);
    CHECK(no == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("time reversed capture absorbs the mode") {
    const double k = kTwoPi * 6e6;
    auto m = sech_mode(k, 1.0, 200e-9);
    auto s = capture_schedule(m, kTwoPi * 500e6);
    auto run = simulate_node(s, 0.0, [&](double t) { return m.amplitude(t); }, m.t_start(), m.t_end(), 0.05e-9, -1.0);
    CHECK(std::norm(run.a.back()) > 0.999);
  }

  TEST_CASE("kappa cap is reported") {
    auto m = sech_mode(kTwoPi * 10e6, 1.0, 120e-9);
    auto s = emission_schedule(m, kTwoPi * 25e6);
    CHECK(s.capped);
    CHECK(s.peak_kappa <= kTwoPi * 25e6 * (1 + 1e-12));
    CHECK_THROWS(emission_schedule(m, 0.0));
    CHECK_THROWS(emission_schedule(m.with_norm(1.0), kTwoPi * 25e6, 0.5));
  }

  TEST_CASE("constant and off schedules") {
    auto c = constant_schedule(3.0, 1.0, 2.0);
    CHECK(c(1.5) == 3.0);
    CHECK(c(2.5) == 0.0);
    CHECK(off_schedule()(0.0) == 0.0);
    CHECK(!sample_schedule(c, 0.25).empty());
  }

  TEST_CASE("undriven node decays at kappa plus gamma") {
    auto c = constant_schedule(2e6, 0, 1e-6);
    auto run = simulate_node(c, 1.0, [](double) { return cd(0); }, 0, 1e-6, 1e-9, 1.0, 1e6);
    CHECK(std::norm(run.a.back()) == doctest::Approx(std::exp(-3e6 * 1e-6)).epsilon(1e-8));
  }
}
