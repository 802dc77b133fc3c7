#pragma once

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace phonon::pulse {

using cd = std::complex<double>;

// A normalized traveling-mode envelope. Amplitude is in s^-1/2 and vanishes outside the support.
class TemporalMode {
 public:
  // shape: real envelope f(u); primitive: any antiderivative of f(u)^2.
  TemporalMode(std::function<double(double)> shape, std::function<double(double)> primitive, double t_origin,
               double t_start, double t_end, double norm);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double norm() const { return norm_; }

  cd amplitude(double t) const;
  double intensity(double t) const;
  // Integral of |amplitude|^2 from t_start to t.
  double cumulative(double t) const;

  TemporalMode delayed(double dt) const;
  TemporalMode with_norm(double norm) const;
  // Restricts the support and renormalizes to the current norm.
  TemporalMode clipped(double lo, double hi) const;
  // Mirror image about t_mirror.
  TemporalMode reversed(double t_mirror) const;

  // Full width at half maximum of |amplitude|, found numerically.
  double amplitude_fwhm() const;

 private:
  double raw(double t) const;
  double raw_primitive(double t) const;

  std::function<double(double)> shape_;
  std::function<double(double)> primitive_;
  double origin_;
  bool mirrored_ = false;
  double t_start_, t_end_, norm_, scale2_;
};

// Amplitude proportional to sech(kappa_c (t - t_center) / 2), truncated below 1e-4 of the peak.
TemporalMode sech_mode(double kappa_c, double norm, double t_center, double truncation = 1e-4);

// Analytic amplitude FWHM of the sech family: 4 acosh(2) / kappa_c.
double sech_fwhm(double kappa_c);

enum class Direction { emit, capture };

struct CouplerSchedule {
  std::function<double(double)> kappa;
  double kappa_max = 0;
  Direction direction = Direction::emit;
  double t_start = 0;
  double t_end = 0;
  // Diagnostics gathered on a dense sample of the support.
  bool capped = false;
  double capped_time = 0;
  double peak_kappa = 0;
  // Times where kappa jumps or kinks: support edges and cap crossings. Integrators step across them.
  std::vector<double> breaks;

  double operator()(double t) const { return kappa(t); }
};

inline constexpr double kDefaultKappaMax = 2.0 * 3.14159265358979323846 * 25e6;

// kappa(t) = |phi|^2 / (p0 - int |phi|^2), capped at kappa_max.
CouplerSchedule emission_schedule(const TemporalMode& mode, double kappa_max = kDefaultKappaMax,
                                  double initial_population = 1.0);

// kappa(t) = |psi|^2 / (p0 + int |psi|^2), the time reverse of emission.
CouplerSchedule capture_schedule(const TemporalMode& incoming, double kappa_max = kDefaultKappaMax,
                                 double initial_population = 0.0);

CouplerSchedule constant_schedule(double kappa, double t_start, double t_end);
CouplerSchedule off_schedule();

// Sampled (t_ns, kappa/2pi in MHz) pairs as a JSON array.
std::vector<std::pair<double, double>> sample_schedule(const CouplerSchedule& s, double dt);
std::string schedule_json(const CouplerSchedule& s, double dt);

// Single driven node: da/dt = -(kappa/2 + gamma/2) a - polarity sqrt(kappa) in(t),
// out(t) = in(t) + polarity sqrt(kappa) a(t). RK4 on a uniform grid.
struct NodeRun {
  std::vector<double> t;
  std::vector<cd> a;
  std::vector<cd> out;
};

NodeRun simulate_node(const CouplerSchedule& s, cd a0, const std::function<cd(double)>& input, double t0, double t1,
                      double dt, double polarity = 1.0, double gamma = 0.0);

}  // namespace phonon::pulse
