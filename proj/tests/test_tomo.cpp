#include <cmath>
#include <random>

#include <doctest.h>

#include "phonon/tomo.hpp"

using namespace phonon;
using namespace phonon::tomo;
using qmath::cd;
using qmath::Mat;
using qmath::Vec;

namespace {

Mat random_state(int dim, unsigned seed) {
  std::mt19937 g(seed);
  std::normal_distribution<double> n;
  Mat a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = cd(n(g), n(g));
  Mat r = a * a.adjoint();
  return r / r.trace();
}

Mat bell(double phi) {
  Vec v = Vec::Zero(4);
  v(2) = 1 / std::sqrt(2.0);
  v(1) = std::polar(1 / std::sqrt(2.0), phi);
  return v * v.adjoint();
}

std::array<DensityMatrix, 4> map_inputs(const std::function<Mat(const Mat&)>& f) {
  auto in = process_inputs();
  std::array<DensityMatrix, 4> out;
  for (int i = 0; i < 4; ++i) out[std::size_t(i)] = DensityMatrix::adopt(f(in[std::size_t(i)].mat()));
  return out;
}

}  // namespace

TEST_SUITE("tomo") {
  TEST_CASE("identity process") {
    auto chi = process_tomography(map_inputs([](const Mat& m) { return m; }));
    CHECK(std::abs(process_fidelity(chi, ChiMatrix::identity()) - 1.0) < 1e-9);
    CHECK(chi_trace_distance(chi, ChiMatrix::identity()) < 1e-9);
  }

  TEST_CASE("bit flip lands on chi_XX") {
    Mat x = qmath::sigma_x().mat();
    auto chi = process_tomography(map_inputs([&](const Mat& m) { return Mat(x * m * x); }));
    CHECK(chi.mat()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("amplitude damping fidelity") {
    const double g = 0.3;
    Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
    k0(0, 0) = 1;
    k0(1, 1) = std::sqrt(1 - g);
    k1(0, 1) = std::sqrt(g);
    auto chi = process_tomography(map_inputs([&](const Mat& m) {
      return Mat(k0 * m * k0.adjoint() + k1 * m * k1.adjoint());
    }));
    double want = std::pow(1 + std::sqrt(1 - g), 2) / 4;
    CHECK(process_fidelity(chi, ChiMatrix::identity()) == doctest::Approx(want).epsilon(1e-9));
  }

  TEST_CASE("depolarizing fidelity") {
    const double p = 0.2;
    auto chi = process_tomography(
        map_inputs([&](const Mat& m) { return Mat((1 - p) * m + p * Mat::Identity(2, 2) / 2.0); }));
    CHECK(chi.mat()(0, 0).real() == doctest::Approx(1 - 0.75 * p).epsilon(1e-9));
    CHECK(process_fidelity(ChiMatrix::depolarizing(), ChiMatrix::identity()) == doctest::Approx(0.25));
  }

  TEST_CASE("state tomography inverts exact correlators") {
    for (unsigned s = 1; s <= 5; ++s) {
      Mat r = random_state(4, s);
      auto rho = DensityMatrix(r);
      CHECK((state_tomography(exact_correlators(rho)).mat() - r).norm() < 1e-10);
      CHECK((state_tomography(measure_settings(rho)).mat() - r).norm() < 1e-10);
    }
  }

  TEST_CASE("readout correction undoes the visibility matrix") {
    auto rho = DensityMatrix(random_state(4, 11));
    auto v = VisibilityMatrix::device_default();
    auto raw = apply_readout(measure_settings(rho), v);
    CHECK((state_tomography(raw, &v).mat() - rho.mat()).norm() < 1e-6);
    CHECK((state_tomography(raw).mat() - rho.mat()).norm() > 1e-3);
  }

  TEST_CASE("device visibility matrix") {
    auto v = VisibilityMatrix::device_default();
    for (int j = 0; j < 4; ++j) CHECK(v.mat().col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.mat()(0, 0) == doctest::Approx(0.959));
    CHECK(v.mat()(3, 3) == doctest::Approx(0.932));
    // Printed rows are prepared states; the stored map is column-stochastic.
    CHECK(v.mat()(1, 0) == doctest::Approx(0.015).epsilon(1e-2));
    CHECK(v.condition_number() < 1.2);
    CHECK(v.total_visibility() == doctest::Approx((0.959 + 0.946 + 0.949 + 0.932) / 4));
    Eigen::Matrix4d bad = Eigen::Matrix4d::Identity() * 0.9;
    CHECK_THROWS(VisibilityMatrix::from_calibration_rows(bad));
  }

  TEST_CASE("probability correction round trip") {
    auto v = VisibilityMatrix::device_default();
    Prob4 p(0.1, 0.2, 0.3, 0.4);
    auto c = correct_readout(apply_readout(p, v), v);
    CHECK((c.p - p).norm() < 1e-12);
    CHECK(c.clamped == 0.0);
    CHECK(marginal_pe(p, 1) == doctest::Approx(0.7));
    CHECK(marginal_pe(p, 2) == doctest::Approx(0.6));
  }

  TEST_CASE("shot sampling is seeded and unbiased") {
    auto v = VisibilityMatrix::identity();
    Prob4 p(0.1, 0.2, 0.3, 0.4);
    auto a = sample_shots(p, v, 200000, 7), b = sample_shots(p, v, 200000, 7), c = sample_shots(p, v, 200000, 8);
    CHECK(a == b);
    CHECK(a != c);
    CHECK((a - p).cwiseAbs().maxCoeff() < 5e-3);
    CHECK(a.sum() == doctest::Approx(1.0));
    CHECK_THROWS(sample_shots(p, v, 0, 1));
  }

  TEST_CASE("Bell overlap and concurrence") {
    auto b = DensityMatrix(bell(0.7));
    CHECK(bell_fidelity(b) == doctest::Approx(1.0));
    CHECK(best_bell_phase(b) == doctest::Approx(0.7));
    CHECK(bell_fidelity(b, 0.7 + M_PI) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(concurrence(b) == doctest::Approx(1.0).epsilon(1e-6));
    Mat prod = Mat::Zero(4, 4);
    prod(2, 2) = 1;
    CHECK(concurrence(DensityMatrix(prod)) == doctest::Approx(0.0).epsilon(1e-9));
    // Werner state: C = max(0, (3p - 1) / 2)
    for (double p : {0.2, 0.5, 0.8}) {
      auto w = DensityMatrix(p * bell(0.0) + (1 - p) * Mat::Identity(4, 4) / 4.0);
      CHECK(concurrence(w) == doctest::Approx(std::max(0.0, (3 * p - 1) / 2)).epsilon(1e-9));
      CHECK(bell_fidelity(w) == doctest::Approx(p + (1 - p) / 4));
    }
  }

  TEST_CASE("single qubit readout modes") {
    Vec psi(2);
    psi << std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4);
    auto rho = DensityMatrix::pure(psi);
    Eigen::Matrix2d v;
    v << 0.95, 0.08, 0.05, 0.92;
    CHECK((single_qubit_tomography(rho, v, Readout::ideal).mat() - rho.mat()).norm() < 1e-12);
    CHECK((single_qubit_tomography(rho, v, Readout::corrected).mat() - rho.mat()).norm() < 1e-9);
    CHECK((single_qubit_tomography(rho, v, Readout::uncorrected).mat() - rho.mat()).norm() > 1e-2);
  }

  TEST_CASE("chi validation") {
    CHECK_THROWS(ChiMatrix(Eigen::Matrix4cd::Identity()));
    CHECK(ChiMatrix::identity().min_eigenvalue() == doctest::Approx(0.0).epsilon(1e-12));
  }
}
