#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phonon/qmath.hpp"

namespace phonon::tomo {

using qmath::DensityMatrix;
using Prob4 = Eigen::Vector4d;  // order {gg, ge, eg, ee}

// Column-stochastic readout map, P_meas = V P_true.
class VisibilityMatrix {
 public:
  explicit VisibilityMatrix(const Eigen::Matrix4d& v);
  static VisibilityMatrix identity();
  // The device calibration, stored column-stochastic. See README for the rounding repair.
  static VisibilityMatrix device_default();
  // Rows indexed by prepared state, as usually printed; rounding is repaired before transposing.
  static VisibilityMatrix from_calibration_rows(Eigen::Matrix4d rows);
  static VisibilityMatrix from_json(const std::string& text);

  const Eigen::Matrix4d& mat() const { return v_; }
  double total_visibility() const { return v_.trace() / 4.0; }
  double condition_number() const;
  std::string to_json() const;

  // Readout map of one qubit with the other one in |g>.
  Eigen::Matrix2d single_qubit(int qubit) const;

 private:
  Eigen::Matrix4d v_;
};

void validate_probabilities(const Prob4& p, double tol = 1e-6);

struct Correction {
  Prob4 p;
  double clamped = 0;  // negative mass removed before renormalizing
};

Correction correct_readout(const Prob4& p, const VisibilityMatrix& v);
Prob4 apply_readout(const Prob4& p, const VisibilityMatrix& v);
double marginal_pe(const Prob4& p, int qubit);

// Multinomial sample of V p; deterministic for a fixed seed.
Prob4 sample_shots(const Prob4& p, const VisibilityMatrix& v, std::int64_t n_shots, std::uint64_t seed);

// One of the nine local Pauli settings, axes in {'X','Y','Z'}.
struct Setting {
  char axis1 = 'Z';
  char axis2 = 'Z';
  Prob4 p = Prob4::Zero();
};

std::vector<Setting> measure_settings(const DensityMatrix& rho);
std::vector<Setting> apply_readout(std::vector<Setting> s, const VisibilityMatrix& v);
std::vector<Setting> sample_settings(std::vector<Setting> s, const VisibilityMatrix& v, std::int64_t n_shots,
                                     std::uint64_t seed);

// Entry (i, j) holds <P_i (x) P_j> with P = {I, X, Y, Z}; (0, 0) must be 1.
using Correlators = Eigen::Matrix4d;

Correlators correlators_from_settings(const std::vector<Setting>& s, const VisibilityMatrix* correct_with = nullptr);
Correlators exact_correlators(const DensityMatrix& rho);

DensityMatrix state_tomography(const Correlators& c);
DensityMatrix state_tomography(const std::vector<Setting>& s, const VisibilityMatrix* correct_with = nullptr);

class ChiMatrix {
 public:
  explicit ChiMatrix(const Eigen::Matrix4cd& chi, double tol = 1e-6);
  static ChiMatrix identity();
  static ChiMatrix depolarizing();

  const Eigen::Matrix4cd& mat() const { return chi_; }
  double min_eigenvalue() const;

 private:
  Eigen::Matrix4cd chi_;
};

// Outputs for the inputs |g>, |e>, (|g>+|e>)/sqrt2, (|g>+i|e>)/sqrt2 in that order.
ChiMatrix process_tomography(const std::array<DensityMatrix, 4>& outputs);
std::array<DensityMatrix, 4> process_inputs();

double process_fidelity(const ChiMatrix& chi, const ChiMatrix& ideal);
double chi_trace_distance(const ChiMatrix& a, const ChiMatrix& b);

// Overlap with (|eg> + e^{i phi}|ge>)/sqrt2; maximized over phi when unset.
double bell_fidelity(const DensityMatrix& rho, std::optional<double> phi = std::nullopt);
double best_bell_phase(const DensityMatrix& rho);
double concurrence(const DensityMatrix& rho);

enum class Readout { ideal, uncorrected, corrected };

// Single-qubit tomography through a readout map with exact probabilities.
DensityMatrix single_qubit_tomography(const DensityMatrix& rho, const Eigen::Matrix2d& v, Readout mode);

std::string matrix_json(const qmath::Mat& m);

}  // namespace phonon::tomo
