#include "phonon/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phonon::qmath {

namespace {

void require_finite(const Mat& m) {
  if (!m.allFinite()) throw std::invalid_argument("operator has non-finite entries");
}

}  // namespace

Operator::Operator(Mat m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw std::invalid_argument("operator must be square");
  require_finite(m_);
}

Operator Operator::identity(int dim) { return Operator(Mat::Identity(dim, dim)); }
Operator Operator::zero(int dim) { return Operator(Mat::Zero(dim, dim)); }

bool Operator::is_hermitian(double tol) const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol; }

Operator Operator::operator*(const Operator& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(m_ * o.m_);
}
Operator Operator::operator+(const Operator& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(m_ + o.m_);
}
Operator Operator::operator-(const Operator& o) const {
  if (dim() != o.dim()) throw std::invalid_argument("operator dimension mismatch");
  return Operator(m_ - o.m_);
}

Operator sigma_minus() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1.0;
  return Operator(m);
}
Operator sigma_plus() { return sigma_minus().adjoint(); }
Operator sigma_x() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return Operator(m);
}
Operator sigma_y() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = cd(0, -1);
  m(1, 0) = cd(0, 1);
  return Operator(m);
}
Operator sigma_z() {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return Operator(m);
}
Operator projector(int index, int dim) {
  if (index < 0 || index >= dim) throw std::invalid_argument("projector index out of range");
  Mat m = Mat::Zero(dim, dim);
  m(index, index) = 1.0;
  return Operator(m);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator kron(const Operator& a, const Operator& b) { return Operator(kron(a.mat(), b.mat())); }

DensityMatrix::DensityMatrix(Mat m, DensityTolerance tol) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw std::invalid_argument("density matrix must be square");
  require_finite(m_);
  if (hermiticity_error() > tol.hermitian) throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(trace() - 1.0) > tol.trace) throw std::invalid_argument("density matrix trace differs from 1");
  if (min_eigenvalue() < -tol.eigen) throw std::invalid_argument("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::adopt(Mat m) {
  DensityMatrix d;
  d.m_ = std::move(m);
  return d;
}

DensityMatrix DensityMatrix::pure(const Vec& psi) {
  double n = psi.norm();
  if (n == 0) throw std::invalid_argument("zero state vector");
  Vec u = psi / n;
  return DensityMatrix(u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) { return DensityMatrix(Mat::Identity(dim, dim) / double(dim)); }

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m_), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityMatrix::hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

CollapseChannel CollapseChannel::constant(Operator op, double rate) {
  if (!(rate >= 0)) throw std::invalid_argument("collapse rate must be non-negative");
  return {std::move(op), [rate](double) { return rate; }, {}};
}

CollapseChannel CollapseChannel::scheduled(Operator op, std::function<double(double)> rate) {
  return {std::move(op), std::move(rate), {}};
}

CollapseChannel CollapseChannel::moving(std::function<Operator(double)> op) {
  return {Operator{}, [](double) { return 1.0; }, std::move(op)};
}

Hamiltonian static_hamiltonian(Operator h) {
  return [h = std::move(h)](double) { return h; };
}

TimeGrid::TimeGrid(double t0, double t1, double dt) {
  if (!(t1 > t0)) throw std::invalid_argument("time grid needs t1 > t0");
  if (!(dt > 0)) throw std::invalid_argument("time grid needs dt > 0");
  double n = (t1 - t0) / dt;
  if (n > kMaxSteps) throw std::invalid_argument("time grid exceeds 1e7 steps");
  auto steps = static_cast<std::size_t>(std::llround(n));
  if (steps == 0) steps = 1;
  if (std::abs(n - double(steps)) > 1e-6) {
    std::ostringstream os;
    os << "dt " << dt << " does not divide [" << t0 << ", " << t1 << "]";
    throw std::invalid_argument(os.str());
  }
  t0_ = t0;
  t1_ = t1;
  steps_ = steps;
  dt_ = (t1 - t0) / double(steps);
}

TimeGrid TimeGrid::with_steps(double t0, double t1, std::size_t steps) {
  if (!(t1 > t0) || steps == 0) throw std::invalid_argument("invalid time grid");
  if (double(steps) > kMaxSteps) throw std::invalid_argument("time grid exceeds 1e7 steps");
  TimeGrid g;
  g.t0_ = t0;
  g.t1_ = t1;
  g.steps_ = steps;
  g.dt_ = (t1 - t0) / double(steps);
  return g;
}

namespace {

struct Frozen {
  Mat h;
  std::vector<Mat> l;      // sqrt(rate) * L
  std::vector<Mat> ldl;    // L^dag L, rate included
};

Frozen freeze(const Hamiltonian& h, const std::vector<CollapseChannel>& channels, double t, int dim) {
  Frozen f;
  f.h = h ? h(t).mat() : Mat::Zero(dim, dim);
  if (f.h.rows() != dim) throw std::invalid_argument("Hamiltonian dimension mismatch");
  for (const auto& c : channels) {
    double r = c.rate ? c.rate(t) : 1.0;
    if (!(r >= 0) || !std::isfinite(r)) throw std::invalid_argument("collapse rate must be finite and non-negative");
    if (r == 0) continue;
    Mat l = c.operator_at(t).mat();
    if (l.rows() != dim) throw std::invalid_argument("collapse operator dimension mismatch");
    l *= std::sqrt(r);
    f.ldl.push_back(l.adjoint() * l);
    f.l.push_back(std::move(l));
  }
  return f;
}

Mat apply_frozen(const Frozen& f, const Mat& rho) {
  const cd mi(0, -1);
  Mat out = mi * (f.h * rho - rho * f.h);
  for (std::size_t k = 0; k < f.l.size(); ++k) {
    out.noalias() += f.l[k] * rho * f.l[k].adjoint();
    out.noalias() -= 0.5 * (f.ldl[k] * rho + rho * f.ldl[k]);
  }
  return out;
}

void check_state(const Mat& rho, double t, double dt, double tol) {
  double tr_err = std::abs(rho.trace().real() - 1.0);
  double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  double eig = DensityMatrix::adopt(rho).min_eigenvalue();
  if (!rho.allFinite() || tr_err > tol || herm > tol || eig < -tol) {
    std::ostringstream os;
    os << "density matrix invariant violated at t = " << t << " s (trace error " << tr_err
       << ", min eigenvalue " << eig << "); retry with dt <= " << dt / 4;
    throw IntegrationError(os.str(), dt / 4);
  }
}

}  // namespace

Mat lindblad_rhs(const Hamiltonian& h, const std::vector<CollapseChannel>& channels, const Mat& rho, double t) {
  return apply_frozen(freeze(h, channels, t, int(rho.rows())), rho);
}

DensityMatrix integrate_me_observed(const Hamiltonian& h, const std::vector<CollapseChannel>& channels,
                                    const DensityMatrix& rho0, const TimeGrid& grid, const MeObserver& observe,
                                    double violation_tol, const std::vector<double>& breakpoints) {
  const int dim = rho0.dim();
  const double dt = grid.dt();
  std::vector<double> br(breakpoints);
  std::sort(br.begin(), br.end());
  // Coefficients are frozen on the near side of a breakpoint so each substep sees one smooth piece.
  const double eps = 1e-9 * dt;
  auto near_break = [&](double t) {
    auto it = std::lower_bound(br.begin(), br.end(), t - eps);
    return it != br.end() && *it <= t + eps;
  };
  auto rk4 = [&](Mat& rho, const Frozen& fa, const Frozen& fm, const Frozen& fb, double h_) {
    Mat k1 = apply_frozen(fa, rho);
    Mat k2 = apply_frozen(fm, rho + 0.5 * h_ * k1);
    Mat k3 = apply_frozen(fm, rho + 0.5 * h_ * k2);
    Mat k4 = apply_frozen(fb, rho + h_ * k3);
    rho += (h_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  Mat rho = rho0.mat();
  if (observe) observe(0, grid.at(0), rho);
  Frozen fa = freeze(h, channels, grid.at(0), dim);
  bool fa_exact = !near_break(grid.at(0));
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid.at(k), t1 = grid.at(k + 1);
    if (!fa_exact) fa = freeze(h, channels, t + eps, dim);
    auto lo = std::upper_bound(br.begin(), br.end(), t + eps);
    auto hi = std::lower_bound(br.begin(), br.end(), t1 - eps);
    double a = t;
    for (auto it = lo; it != hi; ++it) {
      const double b = *it;
      if (b - a <= eps) continue;
      Frozen fm = freeze(h, channels, 0.5 * (a + b), dim);
      Frozen fb = freeze(h, channels, b - eps, dim);
      rk4(rho, fa, fm, fb, b - a);
      fa = freeze(h, channels, b + eps, dim);
      a = b;
    }
    const bool end_break = near_break(t1);
    Frozen fm = freeze(h, channels, 0.5 * (a + t1), dim);
    Frozen fb = freeze(h, channels, end_break ? t1 - eps : t1, dim);
    rk4(rho, fa, fm, fb, t1 - a);
    rho = hermitize(rho);
    check_state(rho, t1, dt, violation_tol);
    if (observe) observe(k + 1, t1, rho);
    fa = std::move(fb);
    fa_exact = !end_break;
  }
  return DensityMatrix::adopt(rho);
}

MeTrajectory integrate_me(const Hamiltonian& h, const std::vector<CollapseChannel>& channels,
                          const DensityMatrix& rho0, const TimeGrid& grid, IntegrateOptions opts) {
  MeTrajectory out;
  std::size_t every = std::max<std::size_t>(1, opts.store_every);
  integrate_me_observed(
      h, channels, rho0, grid,
      [&](std::size_t k, double t, const Mat& rho) {
        if (k % every == 0 || k == grid.steps()) {
          out.times.push_back(t);
          out.states.push_back(DensityMatrix::adopt(rho));
        }
      },
      opts.violation_tol, opts.breakpoints);
  return out;
}

double expect(const Operator& op, const DensityMatrix& rho) {
  if (op.dim() != rho.dim()) throw std::invalid_argument("expectation dimension mismatch");
  if (!op.is_hermitian(1e-10)) throw std::invalid_argument("expectation requires a Hermitian operator");
  return (op.mat() * rho.mat()).trace().real();
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  if (rho.dim() != 4) throw std::invalid_argument("partial trace needs a two-qubit state");
  if (keep != 1 && keep != 2) throw std::invalid_argument("keep must be 1 or 2");
  Mat out = Mat::Zero(2, 2);
  const Mat& m = rho.mat();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int s = 0; s < 2; ++s)
        out(a, b) += keep == 1 ? m(2 * a + s, 2 * b + s) : m(2 * s + a, 2 * s + b);
  return DensityMatrix::adopt(out);
}

Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Mat project_to_density(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m));
  Eigen::VectorXd lam = es.eigenvalues();
  // Euclidean projection of the spectrum onto the probability simplex.
  std::vector<double> s(lam.data(), lam.data() + lam.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0, theta = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    double th = (cum - 1.0) / double(i + 1);
    if (s[i] - th > 0) theta = th;
  }
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i) - theta, 0.0);
  Mat v = es.eigenvectors();
  return v * lam.cast<cd>().asDiagonal() * v.adjoint();
}

double pure_dephasing_rate(double t1, double t2) {
  if (!(t1 > 0) || !(t2 > 0)) throw std::invalid_argument("coherence times must be positive");
  return std::max(0.0, 1.0 / t2 - 1.0 / (2.0 * t1));
}

}  // namespace phonon::qmath
