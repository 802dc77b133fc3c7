#include <cmath>
#include <random>

#include <doctest.h>

#include "phonon/analysis.hpp"

using namespace phonon::analysis;

TEST_SUITE("analysis") {
  TEST_CASE("Purcell coupling and dispersive shift") {
    double g = purcell_coupling(6e6, 147e6);
    CHECK(g == doctest::Approx(std::sqrt(6e6 * 147e6) / 2));
    CHECK(4 * g * g / 147e6 == doctest::Approx(6e6));
    double chi = dispersive_shift(g, 4.190e9 - 3.976e9);
    CHECK(chi / 1e6 == doctest::Approx(1.03).epsilon(1e-3));
    CHECK(dispersive_phase(chi, 200e-9) / M_PI == doctest::Approx(0.412).epsilon(1e-3));
    CHECK_THROWS(dispersive_shift(1, 0));
    CHECK_THROWS(purcell_coupling(1, 0));
  }

  TEST_CASE("detuned Purcell rate is Lorentzian") {
    CHECK(detuned_purcell_rate(5e6, 100e6, 0) == doctest::Approx(5e6));
    CHECK(detuned_purcell_rate(5e6, 100e6, 50e6) == doctest::Approx(2.5e6));
  }

  TEST_CASE("phase wrapping") {
    CHECK(wrap_phase(M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_phase(-M_PI) == doctest::Approx(M_PI));
    CHECK(wrap_phase(3 * M_PI / 2) == doctest::Approx(-M_PI / 2));
    CHECK(wrap_phase(0.3 + 8 * M_PI) == doctest::Approx(0.3));
  }

  TEST_CASE("cosine fit recovers a noiseless fringe") {
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 16; ++i) {
      double x = 2 * M_PI * i / 16;
      s.push_back({x, 0.4 + 0.1 * std::cos(x - 2.5)});
    }
    auto f = fit_cosine(s);
    CHECK(f.amplitude == doctest::Approx(0.1));
    CHECK(f.offset == doctest::Approx(0.4));
    CHECK(f.phase0 == doctest::Approx(2.5));
    CHECK(f.visibility == doctest::Approx(0.25));
    CHECK(f.residual_norm < 1e-12);
  }

  TEST_CASE("cosine fit phase error shrinks with noise") {
    std::mt19937 g(3);
    std::normal_distribution<double> n(0, 0.01);
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 64; ++i) {
      double x = 2 * M_PI * i / 64;
      s.push_back({x, 0.5 + 0.3 * std::cos(x + 1.0) + n(g)});
    }
    auto f = fit_cosine(s);
    CHECK(std::abs(f.phase0 + 1.0) < 4 * f.phase0_stderr + 1e-3);
    CHECK(f.phase0_stderr > 0);
    CHECK(f.phase0_stderr < 0.05);
  }

  TEST_CASE("exponential fit") {
    std::vector<std::pair<double, double>> s;
    for (int i = 1; i <= 6; ++i) s.push_back({i * 1e-6, 0.8 * std::exp(-i * 1e-6 / 1.5e-6)});
    auto f = fit_exponential_decay(s);
    CHECK(f.decay_time == doctest::Approx(1.5e-6).epsilon(1e-9));
    CHECK(f.amplitude == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(loss_from_decay_time(3863, f.decay_time) == doctest::Approx(1 / (3863 * 1.5e-6)));
  }

  TEST_CASE("bad fits are rejected") {
    std::vector<std::pair<double, double>> s{{0, 1}, {1, 2}, {2, 4}};
    CHECK_THROWS(fit_exponential_decay(s));
    s = {{0, 1}, {1, -1}, {2, 0.5}};
    CHECK_THROWS(fit_exponential_decay(s));
    CHECK_THROWS(fit_cosine({{0, 1}, {1, 1}}));
    std::vector<std::pair<double, double>> same(6, {0.5, 1.0});
    CHECK_THROWS(fit_cosine(same));
  }

  TEST_CASE("config validation") {
    DispersiveConfig c{1e6, 0, 1e6, 1e6, 1e-7};
    CHECK_THROWS(c.validate());
    c.delta = 1e8;
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("json helpers") {
    FringeFit f;
    f.visibility = 0.5;
    CHECK(fringe_json(f).find("visibility") != std::string::npos);
    CHECK(decay_json(DecayFit{}).find("decay_time") != std::string::npos);
  }
}
