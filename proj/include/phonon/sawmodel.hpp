#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "phonon/parallel.hpp"

namespace phonon::saw {

using cd = std::complex<double>;

// (b1, b2, I) = P (a1, a2, V). Port 1 faces left, port 2 faces right.
// Acoustic power is |b|^2 / 2 and electrical power Re(V* I) / 2, so P31 = 2 P13.
struct PMatrix {
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();

  cd operator()(int i, int j) const { return m(i, j); }
  cd& operator()(int i, int j) { return m(i, j); }
};

// Lossless reflective element with transduction strength g (g = 0 for open gratings).
PMatrix element(cd r, double g);
// Free propagation over phase k L; complex k carries attenuation.
PMatrix propagation(cd kl);
// A on the left of B, sharing the electrical port.
PMatrix cascade(const PMatrix& a, const PMatrix& b);
PMatrix power(const PMatrix& cell, int n);

struct IDTParams {
  int cells = 24;
  double wavelength = 0.975e-6;
  double aperture = 150e-6;
  double metallization_ratio = 0.52;
  cd reflectivity{0.0, -0.009};
  double dv_v = 0.0344;
  double velocity = 3875.0;  // effective velocity under the fingers
  double transduction = 1e-3;
  bool double_electrode = true;

  void validate() const;
};

struct MirrorParams {
  int electrodes = 488;
  double wavelength = 1e-6;
  double aperture = 150e-6;
  double metallization_ratio = 0.79;
  cd reflectivity{0.0, -0.045};
  double dv_v = 0.027;
  double gap = 500e-9;  // design spacing to the last IDT finger

  double velocity(double v_free) const { return v_free * (1.0 + dv_v); }
  void validate() const;
};

struct UDTParams {
  IDTParams idt;
  MirrorParams mirror;
  double d_eff = 140e-9;
  double v_free = 3863.0;
  double loss_alpha = 0.0;  // Np/m inside the transducer, energy convention
  double kappa_ref = 2 * 3.14159265358979323846 * 147e6;
  double f_ref = 3.976e9;
};

PMatrix idt_pmatrix(const IDTParams& p, double f, double loss_alpha = 0.0);
PMatrix mirror_pmatrix(const MirrorParams& p, double v_free, double f, double loss_alpha = 0.0);
// Mirror on port 1, gap d_eff, IDT, port 2 faces the channel.
PMatrix udt_pmatrix(const UDTParams& p, double f);

struct UDTResponse {
  std::vector<double> f;
  std::vector<cd> forward;     // P23
  std::vector<cd> backward;    // P13
  std::vector<cd> reflection;  // P22 with the electrical port shorted
  std::vector<double> directivity_db;
  std::vector<double> conductance;  // Re P33
  std::vector<double> kappa_udt;    // rad/s
};

std::vector<double> frequency_grid(double f_lo, double f_hi, double df);

UDTResponse udt_response(const UDTParams& p, const std::vector<double>& f, Exec exec = Exec::parallel);

// D = |forward|^2 / (|forward|^2 + |backward|^2), linearly interpolated on the grid.
double directivity_fraction(const UDTResponse& r, double f);
double directivity_fraction_db(double directivity_db);
cd reflection_at(const UDTResponse& r, double f);
double kappa_at(const UDTResponse& r, double f);

struct Notch {
  double frequency = 0;
  double width = 0;  // contiguous span with forward power at least 10 dB below the in-band peak
  double depth_db = 0;
};

Notch find_notch(const UDTResponse& r, double f_lo, double f_hi);

// Largest |singular value| of the acoustic 2x2 block.
double acoustic_gain(const PMatrix& p);
// Max violation of P12 = P21 and P3k = 2 Pk3.
double reciprocity_error(const PMatrix& p);
// Re P33 - |P13|^2 - |P23|^2, zero for a lossless structure.
double energy_defect(const PMatrix& p);

}  // namespace phonon::saw
