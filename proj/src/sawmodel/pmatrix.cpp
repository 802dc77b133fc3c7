#include <cmath>
#include <stdexcept>

#include "phonon/sawmodel.hpp"

namespace phonon::saw {

PMatrix element(cd r, double g) {
  if (std::abs(r) > 1.0) throw std::invalid_argument("element reflectivity exceeds 1");
  PMatrix p;
  cd t = std::abs(r) > 0 ? std::sqrt(1.0 - std::norm(r)) * std::polar(1.0, std::arg(r) + M_PI / 2) : cd(1.0);
  // Transduction phase sits halfway between the symmetric and antisymmetric eigenmodes.
  cd tau = g * std::polar(1.0, 0.5 * std::arg(r + t));
  p(0, 0) = p(1, 1) = r;
  p(0, 1) = p(1, 0) = t;
  p(0, 2) = p(1, 2) = tau;
  p(2, 0) = p(2, 1) = 2.0 * tau;
  p(2, 2) = 2.0 * std::norm(tau);
  return p;
}

PMatrix propagation(cd kl) {
  PMatrix p;
  p(0, 1) = p(1, 0) = std::exp(cd(0, -1) * kl);
  return p;
}

PMatrix cascade(const PMatrix& a, const PMatrix& b) {
  // y: wave from A into B, x: wave from B into A; inputs (a1, a2, V).
  cd den = 1.0 - a(1, 1) * b(0, 0);
  if (std::abs(den) < 1e-300) throw std::runtime_error("singular cascade");
  Eigen::RowVector3cd y(a(1, 0), a(1, 1) * b(0, 1), a(1, 1) * b(0, 2) + a(1, 2));
  y /= den;
  Eigen::RowVector3cd x = b(0, 0) * y + Eigen::RowVector3cd(0.0, b(0, 1), b(0, 2));
  PMatrix out;
  out.m.row(0) = Eigen::RowVector3cd(a(0, 0), 0.0, a(0, 2)) + a(0, 1) * x;
  out.m.row(1) = b(1, 0) * y + Eigen::RowVector3cd(0.0, b(1, 1), b(1, 2));
  out.m.row(2) = Eigen::RowVector3cd(a(2, 0), 0.0, a(2, 2) + b(2, 2)) + a(2, 1) * x + b(2, 0) * y +
                 Eigen::RowVector3cd(0.0, b(2, 1), 0.0);
  return out;
}

PMatrix power(const PMatrix& cell, int n) {
  if (n < 1) throw std::invalid_argument("cell count must be positive");
  PMatrix result;
  bool have = false;
  PMatrix x = cell;
  while (n) {
    if (n & 1) {
      result = have ? cascade(result, x) : x;
      have = true;
    }
    n >>= 1;
    if (n) x = cascade(x, x);
  }
  return result;
}

double acoustic_gain(const PMatrix& p) {
  Eigen::Matrix2cd s;
  s << p(0, 0), p(0, 1), p(1, 0), p(1, 1);
  return Eigen::JacobiSVD<Eigen::Matrix2cd>(s).singularValues()(0);
}

double reciprocity_error(const PMatrix& p) {
  double e = std::abs(p(0, 1) - p(1, 0));
  e = std::max(e, std::abs(p(2, 0) - 2.0 * p(0, 2)));
  e = std::max(e, std::abs(p(2, 1) - 2.0 * p(1, 2)));
  return e;
}

double energy_defect(const PMatrix& p) { return p(2, 2).real() - std::norm(p(0, 2)) - std::norm(p(1, 2)); }

}  // namespace phonon::saw
