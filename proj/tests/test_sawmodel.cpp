#include <cmath>

#include <doctest.h>

#include "phonon/sawmodel.hpp"

using namespace phonon;
using namespace phonon::saw;

TEST_SUITE("sawmodel") {
  TEST_CASE("propagation sections compose") {
    auto a = cascade(propagation(0.7), propagation(cd(1.1, -0.01)));
    auto b = propagation(cd(1.8, -0.01));
    CHECK((a.m - b.m).norm() < 1e-14);
  }

  TEST_CASE("single element is lossless and reciprocal") {
    auto e = element(cd(0, -0.3), 0.2);
    CHECK(std::abs(energy_defect(e)) < 1e-14);
    CHECK(reciprocity_error(e) < 1e-14);
    CHECK(std::norm(e(0, 0)) + std::norm(e(1, 0)) == doctest::Approx(1.0));
    CHECK_THROWS(element(1.5, 0));
  }

  // In-phase reflectors compose like tanh addition: |R_N| = tanh(N atanh |r|).
  TEST_CASE("Bragg grating reflectance") {
    MirrorParams m;
    m.electrodes = 20;
    const double v0 = 3863.0;
    const double fb = m.velocity(v0) / m.wavelength;
    auto p = mirror_pmatrix(m, v0, fb);
    CHECK(std::abs(p(0, 0)) == doctest::Approx(std::tanh(20 * std::atanh(0.045))).epsilon(1e-10));
    CHECK(std::norm(p(0, 0)) + std::norm(p(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    m.electrodes = 488;
    CHECK(std::abs(mirror_pmatrix(m, v0, fb)(0, 0)) > 0.999999);
  }

  TEST_CASE("power matches repeated cascading") {
    auto cell = cascade(cascade(propagation(0.4), element(cd(0, -0.05), 0.01)), propagation(0.4));
    PMatrix rep = cell;
    for (int i = 1; i < 7; ++i) rep = cascade(rep, cell);
    CHECK((power(cell, 7).m - rep.m).norm() < 1e-12);
    CHECK_THROWS(power(cell, 0));
  }

  TEST_CASE("lossless transducer conserves power") {
    UDTParams p;
    for (double f : {3.85e9, 3.976e9, 4.102e9}) {
      auto m = udt_pmatrix(p, f);
      CHECK(std::abs(energy_defect(m)) < 1e-9 * m(2, 2).real() + 1e-15);
      CHECK(reciprocity_error(m) < 1e-9);
      CHECK(acoustic_gain(m) <= 1 + 1e-9);
    }
  }

  TEST_CASE("loss makes the structure strictly passive") {
    UDTParams p;
    p.loss_alpha = 500;
    auto m = udt_pmatrix(p, 3.976e9);
    CHECK(energy_defect(m) > 0);
    CHECK(acoustic_gain(m) < 1);
  }

  TEST_CASE("directivity helpers") {
    CHECK(directivity_fraction_db(10.0) == doctest::Approx(10.0 / 11.0));
    CHECK(directivity_fraction_db(0.0) == doctest::Approx(0.5));
    UDTParams p;
    auto f = frequency_grid(3.9e9, 4.0e9, 10e6);
    CHECK(f.size() == 11);
    auto r = udt_response(p, f);
    CHECK(directivity_fraction(r, 3.95e9) ==
          doctest::Approx(directivity_fraction_db(r.directivity_db[5])).epsilon(1e-9));
    CHECK(kappa_at(r, p.f_ref) == doctest::Approx(p.kappa_ref).epsilon(1e-2));
    CHECK_THROWS(directivity_fraction(r, 5e9));
  }

  TEST_CASE("serial and parallel responses agree") {
    UDTParams p;
    auto f = frequency_grid(3.8e9, 4.2e9, 5e6);
    auto a = udt_response(p, f, Exec::serial), b = udt_response(p, f, Exec::parallel);
    CHECK(a.directivity_db == b.directivity_db);
    CHECK(a.reflection == b.reflection);
  }

  TEST_CASE("notch search on a synthetic response") {
    UDTResponse r;
    for (int i = 0; i <= 400; ++i) {
      double f = 3.8e9 + i * 1e6;
      r.f.push_back(f);
      double x = (f - 4.0e9) / 10e6;
      r.forward.push_back(std::sqrt(1 - 0.999 * std::exp(-x * x)));
      r.backward.push_back(0.1);
    }
    auto n = find_notch(r, 3.85e9, 4.15e9);
    CHECK(n.frequency == doctest::Approx(4.0e9));
    CHECK(n.depth_db == doctest::Approx(30.0).epsilon(1e-3));
    // Below a tenth of the peak for |x| < sqrt(-ln(0.9 / 0.999)) = 0.323, i.e. +-3 points of a 1 MHz grid.
    CHECK(n.width == doctest::Approx(6e6));
  }

  TEST_CASE("invalid parameters") {
    IDTParams i;
    i.cells = 0;
    CHECK_THROWS(i.validate());
    MirrorParams m;
    m.reflectivity = 2.0;
    CHECK_THROWS(m.validate());
    CHECK_THROWS(frequency_grid(4e9, 3e9, 1e6));
  }
}
