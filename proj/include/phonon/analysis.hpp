#pragma once

#include <string>
#include <utility>
#include <vector>

namespace phonon::analysis {

// Frequencies are in Hz (cycles), times in seconds, phases in radians.
struct DispersiveConfig {
  double g = 0;
  double delta = 0;
  double kappa_udt = 0;
  double kappa_q = 0;
  double dt = 0;

  void validate() const;
};

// g = sqrt(kappa_q kappa_udt) / 2, the resonant Purcell relation kappa_q = 4 g^2 / kappa_udt.
double purcell_coupling(double kappa_q, double kappa_udt);
double dispersive_shift(double g, double delta);
double dispersive_phase(double chi, double dt);
// Residual decay into the channel when the qubit sits delta away from the transducer resonance.
double detuned_purcell_rate(double kappa_q, double kappa_udt, double delta);

struct FringeFit {
  double amplitude = 0;  // B in C + B cos(x - phase0), B >= 0
  double offset = 0;     // C
  double phase0 = 0;     // wrapped to (-pi, pi]
  double visibility = 0; // (max - min) / (max + min) = B / C
  double residual_norm = 0;
  double phase0_stderr = 0;
};

FringeFit fit_cosine(const std::vector<std::pair<double, double>>& samples);

struct DecayFit {
  double decay_time = 0;
  double amplitude = 0;
  double residual_norm = 0;
  double decay_time_stderr = 0;
  double amplitude_stderr = 0;
};

// Least squares A exp(-t / T) via a log-linear start and Gauss-Newton refinement.
DecayFit fit_exponential_decay(const std::vector<std::pair<double, double>>& samples);

// alpha = 1 / (v T_saw).
double loss_from_decay_time(double velocity, double t_saw);

// Wraps into (-pi, pi].
double wrap_phase(double x);

std::string fringe_json(const FringeFit& f);
std::string decay_json(const DecayFit& f);

}  // namespace phonon::analysis
