#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace phonon::qmath {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

class Operator {
 public:
  Operator() = default;
  explicit Operator(Mat m);

  static Operator identity(int dim);
  static Operator zero(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }

  bool is_hermitian(double tol = 1e-10) const;
  Operator adjoint() const { return Operator(m_.adjoint()); }

  Operator operator*(const Operator& o) const;
  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(cd s) const { return Operator(m_ * s); }
  friend Operator operator*(cd s, const Operator& o) { return o * s; }

 private:
  Mat m_;
};

// |g> is index 0, |e> is index 1.
Operator sigma_minus();
Operator sigma_plus();
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
Operator projector(int index, int dim);

Operator kron(const Operator& a, const Operator& b);
Mat kron(const Mat& a, const Mat& b);

struct DensityTolerance {
  double hermitian = 1e-10;
  double trace = 1e-9;
  double eigen = 1e-9;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  // Throws std::invalid_argument when the invariants fail.
  explicit DensityMatrix(Mat m, DensityTolerance tol = {});

  // No validation. Used by integrators that check invariants themselves.
  static DensityMatrix adopt(Mat m);
  static DensityMatrix pure(const Vec& psi);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  cd operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }
  double min_eigenvalue() const;
  double hermiticity_error() const;

 private:
  Mat m_;
};

struct CollapseChannel {
  Operator op;
  std::function<double(double)> rate;
  // Optional time-dependent operator; when set it replaces `op`.
  std::function<Operator(double)> op_at;

  static CollapseChannel constant(Operator op, double rate);
  static CollapseChannel scheduled(Operator op, std::function<double(double)> rate);
  static CollapseChannel moving(std::function<Operator(double)> op);

  Operator operator_at(double t) const { return op_at ? op_at(t) : op; }
};

using Hamiltonian = std::function<Operator(double)>;

Hamiltonian static_hamiltonian(Operator h);

class TimeGrid {
 public:
  // dt is adjusted to divide [t0, t1] when the mismatch is below 1e-6 of a step.
  TimeGrid(double t0, double t1, double dt);
  static TimeGrid with_steps(double t0, double t1, std::size_t steps);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  double at(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }

  static constexpr double kMaxSteps = 1e7;

 private:
  TimeGrid() = default;
  double t0_ = 0, t1_ = 0, dt_ = 0;
  std::size_t steps_ = 0;
};

struct MeTrajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double suggested_dt)
      : std::runtime_error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

Mat lindblad_rhs(const Hamiltonian& h, const std::vector<CollapseChannel>& channels,
                 const Mat& rho, double t);

struct IntegrateOptions {
  std::size_t store_every = 1;  // keep every n-th state; the final state is always kept
  double violation_tol = 1e-6;
  std::vector<double> breakpoints;  // times where coefficients jump or kink
};

MeTrajectory integrate_me(const Hamiltonian& h, const std::vector<CollapseChannel>& channels,
                          const DensityMatrix& rho0, const TimeGrid& grid,
                          IntegrateOptions opts = {});

// Streams every grid state to `observe` instead of storing them. Returns the final state.
using MeObserver = std::function<void(std::size_t k, double t, const Mat& rho)>;
DensityMatrix integrate_me_observed(const Hamiltonian& h,
                                    const std::vector<CollapseChannel>& channels,
                                    const DensityMatrix& rho0, const TimeGrid& grid,
                                    const MeObserver& observe, double violation_tol = 1e-6,
                                    const std::vector<double>& breakpoints = {});

double expect(const Operator& op, const DensityMatrix& rho);

// keep = 1 keeps the first (slow-index) qubit, keep = 2 the second.
DensityMatrix partial_trace(const DensityMatrix& rho, int keep);

Mat hermitize(const Mat& m);

// Frobenius-nearest unit-trace PSD matrix (eigenvalues projected onto the simplex).
Mat project_to_density(const Mat& m);

// Markovian pure-dephasing rate from T1 and a T2, clamped at zero.
double pure_dephasing_rate(double t1, double t2);

}  // namespace phonon::qmath
