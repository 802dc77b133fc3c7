#include "phonon/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace phonon::tomo {

using qmath::cd;
using qmath::Mat;

namespace {

const std::array<Eigen::Matrix2cd, 4>& paulis() {
  static const std::array<Eigen::Matrix2cd, 4> p = [] {
    std::array<Eigen::Matrix2cd, 4> q;
    q[0] = Eigen::Matrix2cd::Identity();
    q[1] << 0, 1, 1, 0;
    q[2] << 0, cd(0, -1), cd(0, 1), 0;
    q[3] << 1, 0, 0, -1;
    return q;
  }();
  return p;
}

int axis_index(char a) {
  switch (a) {
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
  }
  throw std::invalid_argument("measurement axis must be X, Y or Z");
}

// Rotation that maps the +1 eigenstate of the axis onto |g>.
Eigen::Matrix2cd basis_change(char a) {
  const double s = 1 / std::sqrt(2.0);
  Eigen::Matrix2cd h;
  h << s, s, s, -s;
  switch (a) {
    case 'X': return h;
    case 'Y': {
      Eigen::Matrix2cd sdg = Eigen::Matrix2cd::Identity();
      sdg(1, 1) = cd(0, -1);
      return h * sdg;
    }
    case 'Z': return Eigen::Matrix2cd::Identity();
  }
  throw std::invalid_argument("measurement axis must be X, Y or Z");
}

double sign_of(int outcome_bit) { return outcome_bit == 0 ? 1.0 : -1.0; }

Eigen::Matrix2cd to2(const Mat& m) {
  if (m.rows() != 2 || m.cols() != 2) throw std::invalid_argument("expected a single-qubit matrix");
  return m;
}

}  // namespace

VisibilityMatrix::VisibilityMatrix(const Eigen::Matrix4d& v) : v_(v) {
  if (!v_.allFinite()) throw std::invalid_argument("visibility matrix has non-finite entries");
  if (v_.minCoeff() < 0 || v_.maxCoeff() > 1) throw std::invalid_argument("visibility entries must lie in [0, 1]");
  for (int j = 0; j < 4; ++j)
    if (std::abs(v_.col(j).sum() - 1.0) > 1e-6) throw std::invalid_argument("visibility columns must sum to 1");
}

VisibilityMatrix VisibilityMatrix::identity() { return VisibilityMatrix(Eigen::Matrix4d::Identity()); }

VisibilityMatrix VisibilityMatrix::device_default() {
  // Row i: measured distribution for prepared state i, as calibrated. The "<0.001" entry is 0.001.
  Eigen::Matrix4d rows;
  rows << 0.959, 0.015, 0.025, 0.001,
          0.031, 0.946, 0.001, 0.023,
          0.033, 0.001, 0.949, 0.018,
          0.001, 0.036, 0.031, 0.932;
  return from_calibration_rows(rows);
}

VisibilityMatrix VisibilityMatrix::from_calibration_rows(Eigen::Matrix4d rows) {
  if (!rows.allFinite() || rows.minCoeff() < 0) throw std::invalid_argument("calibration entries must be non-negative");
  // Rounded rows can miss 1 by a little; absorb that in the off-diagonal entries, keeping the diagonal.
  for (int i = 0; i < 4; ++i) {
    if (std::abs(rows.row(i).sum() - 1.0) > 5e-3) throw std::invalid_argument("calibration row does not sum to 1");
    double off = rows.row(i).sum() - rows(i, i);
    double want = 1.0 - rows(i, i);
    if (off <= 0 || want < 0) throw std::invalid_argument("calibration row has no off-diagonal weight to adjust");
    for (int j = 0; j < 4; ++j)
      if (j != i) rows(i, j) *= want / off;
  }
  return VisibilityMatrix(rows.transpose());
}

VisibilityMatrix VisibilityMatrix::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("visibility matrix must be a 4x4 array");
  Eigen::Matrix4d v;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw std::invalid_argument("visibility matrix must be a 4x4 array");
    for (int c = 0; c < 4; ++c) v(r, c) = j[r][c].get<double>();
  }
  return VisibilityMatrix(v);
}

double VisibilityMatrix::condition_number() const {
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(v_);
  auto s = svd.singularValues();
  return s(3) > 0 ? s(0) / s(3) : INFINITY;
}

std::string VisibilityMatrix::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(v_(r, c));
    j.push_back(row);
  }
  return j.dump();
}

Eigen::Matrix2d VisibilityMatrix::single_qubit(int qubit) const {
  if (qubit != 1 && qubit != 2) throw std::invalid_argument("qubit must be 1 or 2");
  // Basis indices for the qubit in g/e with the partner in g.
  int ig = 0, ie = qubit == 1 ? 2 : 1;
  Eigen::Matrix2d out;
  for (int c = 0; c < 2; ++c) {
    int col = c == 0 ? ig : ie;
    // Marginalize the measured partner outcome.
    double pg = 0, pe = 0;
    for (int r = 0; r < 4; ++r) {
      bool excited = qubit == 1 ? (r >= 2) : (r % 2 == 1);
      (excited ? pe : pg) += v_(r, col);
    }
    out(0, c) = pg;
    out(1, c) = pe;
  }
  return out;
}

void validate_probabilities(const Prob4& p, double tol) {
  if (!p.allFinite() || p.minCoeff() < -tol || std::abs(p.sum() - 1.0) > tol)
    throw std::invalid_argument("probability vector must be non-negative and sum to 1");
}

Correction correct_readout(const Prob4& p, const VisibilityMatrix& v) {
  if (v.condition_number() >= 1e3) throw std::invalid_argument("visibility matrix is ill-conditioned");
  Correction c;
  c.p = v.mat().partialPivLu().solve(p);
  for (int i = 0; i < 4; ++i)
    if (c.p(i) < 0) {
      c.clamped += -c.p(i);
      c.p(i) = 0;
    }
  if (c.clamped > 0) c.p /= c.p.sum();
  return c;
}

Prob4 apply_readout(const Prob4& p, const VisibilityMatrix& v) { return v.mat() * p; }

double marginal_pe(const Prob4& p, int qubit) {
  if (qubit == 1) return p(2) + p(3);
  if (qubit == 2) return p(1) + p(3);
  throw std::invalid_argument("qubit must be 1 or 2");
}

Prob4 sample_shots(const Prob4& p, const VisibilityMatrix& v, std::int64_t n_shots, std::uint64_t seed) {
  if (n_shots <= 0) throw std::invalid_argument("shot count must be positive");
  Prob4 q = v.mat() * p;
  q = q.cwiseMax(0.0);
  q /= q.sum();
  std::mt19937_64 rng(seed);
  std::int64_t left = n_shots;
  double mass = 1.0;
  Prob4 out = Prob4::Zero();
  for (int i = 0; i < 3; ++i) {
    std::int64_t k = 0;
    if (left > 0 && mass > 0) {
      double pi = std::clamp(q(i) / mass, 0.0, 1.0);
      std::binomial_distribution<std::int64_t> b(left, pi);
      k = b(rng);
    }
    out(i) = double(k);
    left -= k;
    mass -= q(i);
  }
  out(3) = double(left);
  return out / double(n_shots);
}

std::vector<Setting> measure_settings(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("two-qubit state expected");
  std::vector<Setting> out;
  const char axes[3] = {'X', 'Y', 'Z'};
  for (char a : axes)
    for (char b : axes) {
      Eigen::Matrix4cd u = qmath::kron(Mat(basis_change(a)), Mat(basis_change(b)));
      Eigen::Matrix4cd r = u * rho.mat() * u.adjoint();
      Setting s{a, b, Prob4::Zero()};
      for (int k = 0; k < 4; ++k) s.p(k) = std::max(0.0, r(k, k).real());
      s.p /= s.p.sum();
      out.push_back(s);
    }
  return out;
}

std::vector<Setting> apply_readout(std::vector<Setting> s, const VisibilityMatrix& v) {
  for (auto& x : s) x.p = apply_readout(x.p, v);
  return s;
}

std::vector<Setting> sample_settings(std::vector<Setting> s, const VisibilityMatrix& v, std::int64_t n_shots,
                                     std::uint64_t seed) {
  std::uint64_t k = 0;
  for (auto& x : s) x.p = sample_shots(x.p, v, n_shots, seed + 0x9E3779B97F4A7C15ULL * ++k);
  return s;
}

Correlators correlators_from_settings(const std::vector<Setting>& s, const VisibilityMatrix* correct_with) {
  if (s.size() != 9) throw std::invalid_argument("state tomography needs the nine Pauli settings");
  Correlators c = Correlators::Zero();
  Eigen::Matrix4d count = Eigen::Matrix4d::Zero();
  bool seen[4][4] = {};
  for (const auto& x : s) {
    int i = axis_index(x.axis1), j = axis_index(x.axis2);
    if (seen[i][j]) throw std::invalid_argument("duplicate tomography setting");
    seen[i][j] = true;
    Prob4 p = correct_with ? correct_readout(x.p, *correct_with).p : x.p;
    validate_probabilities(p);
    for (int k = 0; k < 4; ++k) {
      double s1 = sign_of(k >> 1), s2 = sign_of(k & 1);
      c(i, j) += p(k) * s1 * s2;
      c(i, 0) += p(k) * s1;
      c(0, j) += p(k) * s2;
    }
    count(i, j) += 1;
    count(i, 0) += 1;
    count(0, j) += 1;
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i + j > 0) c(i, j) /= count(i, j);
  c(0, 0) = 1.0;
  return c;
}

Correlators exact_correlators(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("two-qubit state expected");
  Correlators c;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      c(i, j) = (qmath::kron(Mat(paulis()[i]), Mat(paulis()[j])) * rho.mat()).trace().real();
  return c;
}

DensityMatrix state_tomography(const Correlators& c) {
  if (std::abs(c(0, 0) - 1.0) > 1e-9) throw std::invalid_argument("identity correlator must equal 1");
  Mat rho = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rho += c(i, j) * qmath::kron(Mat(paulis()[i]), Mat(paulis()[j]));
  rho /= 4.0;
  return DensityMatrix::adopt(qmath::project_to_density(rho));
}

DensityMatrix state_tomography(const std::vector<Setting>& s, const VisibilityMatrix* correct_with) {
  return state_tomography(correlators_from_settings(s, correct_with));
}

ChiMatrix::ChiMatrix(const Eigen::Matrix4cd& chi, double tol) : chi_(chi) {
  if (!chi_.allFinite()) throw std::invalid_argument("chi matrix has non-finite entries");
  if ((chi_ - chi_.adjoint()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("chi matrix must be Hermitian");
  if (std::abs(chi_.trace().real() - 1.0) > tol) throw std::invalid_argument("chi matrix trace must be 1");
  if (min_eigenvalue() < -tol) throw std::invalid_argument("chi matrix must be positive");
}

ChiMatrix ChiMatrix::identity() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = 1.0;
  return ChiMatrix(m);
}

ChiMatrix ChiMatrix::depolarizing() { return ChiMatrix(Eigen::Matrix4cd::Identity() / 4.0); }

double ChiMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(0.5 * (chi_ + chi_.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::array<DensityMatrix, 4> process_inputs() {
  const double s = 1 / std::sqrt(2.0);
  qmath::Vec g(2), e(2), p(2), pi(2);
  g << 1, 0;
  e << 0, 1;
  p << s, s;
  pi << s, cd(0, s);
  return {DensityMatrix::pure(g), DensityMatrix::pure(e), DensityMatrix::pure(p), DensityMatrix::pure(pi)};
}

ChiMatrix process_tomography(const std::array<DensityMatrix, 4>& outputs) {
  std::array<Eigen::Matrix2cd, 4> r;
  for (int i = 0; i < 4; ++i) r[i] = to2(outputs[i].mat());
  // Images of the matrix units |n><m|.
  Eigen::Matrix2cd e00 = r[0], e11 = r[1];
  Eigen::Matrix2cd e01 = r[2] + cd(0, 1) * r[3] - cd(0.5, 0.5) * (r[0] + r[1]);
  Eigen::Matrix2cd e10 = e01.adjoint();
  const Eigen::Matrix2cd* img[2][2] = {{&e00, &e01}, {&e10, &e11}};
  // Choi matrix on input (x) output.
  Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m) choi.block<2, 2>(2 * n, 2 * m) = *img[n][m];
  // |P>> has component <k|P|n> at index 2n + k.
  std::array<Eigen::Vector4cd, 4> vp;
  for (int a = 0; a < 4; ++a)
    for (int n = 0; n < 2; ++n)
      for (int k = 0; k < 2; ++k) vp[a](2 * n + k) = paulis()[a](k, n);
  Eigen::Matrix4cd chi;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) chi(a, b) = vp[a].dot(choi * vp[b]) / 4.0;
  return ChiMatrix(qmath::project_to_density(chi));
}

double process_fidelity(const ChiMatrix& chi, const ChiMatrix& ideal) {
  return (chi.mat() * ideal.mat()).trace().real();
}

double chi_trace_distance(const ChiMatrix& a, const ChiMatrix& b) {
  Eigen::Matrix4cd d = a.mat() - b.mat();
  return std::sqrt(std::max(0.0, (d * d).trace().real()));
}

double bell_fidelity(const DensityMatrix& rho, std::optional<double> phi) {
  if (rho.dim() != 4) throw std::invalid_argument("two-qubit state expected");
  const Mat& m = rho.mat();
  double pop = 0.5 * (m(1, 1).real() + m(2, 2).real());
  if (!phi) return pop + std::abs(m(2, 1));
  return pop + (std::polar(1.0, *phi) * m(2, 1)).real();
}

double best_bell_phase(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("two-qubit state expected");
  return -std::arg(rho.mat()(2, 1));
}

double concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("two-qubit state expected");
  Eigen::Matrix4cd yy = qmath::kron(Mat(paulis()[2]), Mat(paulis()[2]));
  Eigen::Matrix4cd r = qmath::hermitize(rho.mat());
  Eigen::Matrix4cd tilde = yy * r.conjugate() * yy;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(r);
  Eigen::Vector4d sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::Matrix4cd root = es.eigenvectors() * sq.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::Matrix4cd m = root * tilde * root;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es2(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  Eigen::Vector4d lam = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(lam.data(), lam.data() + 4, std::greater<>());
  return std::max(0.0, lam(0) - lam(1) - lam(2) - lam(3));
}

DensityMatrix single_qubit_tomography(const DensityMatrix& rho, const Eigen::Matrix2d& v, Readout mode) {
  Eigen::Matrix2cd r = to2(rho.mat());
  Eigen::Vector3d bloch;
  const char axes[3] = {'X', 'Y', 'Z'};
  for (int a = 0; a < 3; ++a) {
    Eigen::Matrix2cd u = basis_change(axes[a]);
    Eigen::Matrix2cd rr = u * r * u.adjoint();
    Eigen::Vector2d p(std::max(0.0, rr(0, 0).real()), std::max(0.0, rr(1, 1).real()));
    p /= p.sum();
    if (mode != Readout::ideal) p = v * p;
    if (mode == Readout::corrected) {
      p = v.partialPivLu().solve(p);
      p = p.cwiseMax(0.0);
      p /= p.sum();
    }
    bloch(a) = p(0) - p(1);
  }
  Mat out = 0.5 * (Mat(paulis()[0]) + bloch(0) * Mat(paulis()[1]) + bloch(1) * Mat(paulis()[2]) +
                   bloch(2) * Mat(paulis()[3]));
  return DensityMatrix::adopt(qmath::project_to_density(out));
}

std::string matrix_json(const Mat& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    j.push_back(row);
  }
  return j.dump();
}

}  // namespace phonon::tomo
