#include "phonon/pulseshape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace phonon::pulse {

TemporalMode::TemporalMode(std::function<double(double)> shape, std::function<double(double)> primitive,
                           double t_origin, double t_start, double t_end, double norm)
    : shape_(std::move(shape)), primitive_(std::move(primitive)), origin_(t_origin), t_start_(t_start),
      t_end_(t_end), norm_(norm) {
  if (!(norm > 0) || norm > 1.0 + 1e-12) throw std::invalid_argument("mode norm must lie in (0, 1]");
  if (!(t_end > t_start)) throw std::invalid_argument("mode support is empty");
  double span = raw_primitive(t_end_) - raw_primitive(t_start_);
  if (!(span > 0)) throw std::invalid_argument("mode has no weight on its support");
  scale2_ = norm_ / span;
}

double TemporalMode::raw(double t) const { return mirrored_ ? shape_(origin_ - t) : shape_(t - origin_); }

double TemporalMode::raw_primitive(double t) const {
  return mirrored_ ? -primitive_(origin_ - t) : primitive_(t - origin_);
}

cd TemporalMode::amplitude(double t) const {
  if (t < t_start_ || t > t_end_) return 0.0;
  return std::sqrt(scale2_) * raw(t);
}

double TemporalMode::intensity(double t) const { return std::norm(amplitude(t)); }

double TemporalMode::cumulative(double t) const {
  double c = std::clamp(t, t_start_, t_end_);
  return scale2_ * (raw_primitive(c) - raw_primitive(t_start_));
}

TemporalMode TemporalMode::delayed(double dt) const {
  TemporalMode m = *this;
  m.origin_ += dt;
  m.t_start_ += dt;
  m.t_end_ += dt;
  return m;
}

TemporalMode TemporalMode::with_norm(double norm) const {
  if (!(norm > 0) || norm > 1.0 + 1e-12) throw std::invalid_argument("mode norm must lie in (0, 1]");
  TemporalMode m = *this;
  m.scale2_ *= norm / norm_;
  m.norm_ = norm;
  return m;
}

TemporalMode TemporalMode::clipped(double lo, double hi) const {
  TemporalMode m = *this;
  m.t_start_ = std::max(t_start_, lo);
  m.t_end_ = std::min(t_end_, hi);
  if (!(m.t_end_ > m.t_start_)) throw std::invalid_argument("clipping leaves an empty support");
  m.scale2_ = norm_ / (m.raw_primitive(m.t_end_) - m.raw_primitive(m.t_start_));
  return m;
}

TemporalMode TemporalMode::reversed(double t_mirror) const {
  TemporalMode m = *this;
  m.origin_ = 2 * t_mirror - origin_;
  m.mirrored_ = !mirrored_;
  m.t_start_ = 2 * t_mirror - t_end_;
  m.t_end_ = 2 * t_mirror - t_start_;
  return m;
}

double TemporalMode::amplitude_fwhm() const {
  const int n = 20000;
  double h = (t_end_ - t_start_) / n;
  int ipk = 0;
  double pk = 0;
  for (int i = 0; i <= n; ++i) {
    double a = std::abs(amplitude(t_start_ + i * h));
    if (a > pk) pk = a, ipk = i;
  }
  auto crossing = [&](double a, double b) {
    // a is above half maximum, b below
    for (int it = 0; it < 100; ++it) {
      double m = 0.5 * (a + b);
      (std::abs(amplitude(m)) >= 0.5 * pk ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  int lo = ipk, hi = ipk;
  while (lo > 0 && std::abs(amplitude(t_start_ + lo * h)) >= 0.5 * pk) --lo;
  while (hi < n && std::abs(amplitude(t_start_ + hi * h)) >= 0.5 * pk) ++hi;
  double tl = crossing(t_start_ + (lo + 1) * h, t_start_ + lo * h);
  double tr = crossing(t_start_ + (hi - 1) * h, t_start_ + hi * h);
  return tr - tl;
}

TemporalMode sech_mode(double kappa_c, double norm, double t_center, double truncation) {
  if (!(kappa_c > 0)) throw std::invalid_argument("kappa_c must be positive");
  if (!(norm > 0) || norm > 1.0) throw std::invalid_argument("mode norm must lie in (0, 1]");
  if (!(truncation > 0 && truncation < 1)) throw std::invalid_argument("truncation must lie in (0, 1)");
  double half = 2.0 / kappa_c * std::acosh(1.0 / truncation);
  auto shape = [kappa_c](double u) { return 1.0 / std::cosh(0.5 * kappa_c * u); };
  auto prim = [kappa_c](double u) { return 2.0 / kappa_c * std::tanh(0.5 * kappa_c * u); };
  return TemporalMode(shape, prim, t_center, t_center - half, t_center + half, norm);
}

double sech_fwhm(double kappa_c) { return 4.0 * std::acosh(2.0) / kappa_c; }

namespace {

void diagnose(CouplerSchedule& s, const std::function<double(double)>& uncapped) {
  const int n = 8000;
  double h = (s.t_end - s.t_start) / n;
  s.breaks = {s.t_start, s.t_end};
  bool prev = false;
  for (int i = 0; i <= n; ++i) {
    double t = s.t_start + i * h;
    double k = uncapped(t);
    bool over = k > s.kappa_max;
    if (over) {
      s.capped = true;
      s.capped_time += h;
    }
    if (i > 0 && over != prev) {
      double lo = t - h, hi = t;
      for (int it = 0; it < 60; ++it) {
        double m = 0.5 * (lo + hi);
        ((uncapped(m) > s.kappa_max) == prev ? lo : hi) = m;
      }
      s.breaks.push_back(0.5 * (lo + hi));
    }
    prev = over;
    s.peak_kappa = std::max(s.peak_kappa, std::min(k, s.kappa_max));
  }
  std::sort(s.breaks.begin(), s.breaks.end());
}

}  // namespace

CouplerSchedule emission_schedule(const TemporalMode& mode, double kappa_max, double initial_population) {
  if (!(kappa_max > 0)) throw std::invalid_argument("kappa_max must be positive");
  if (mode.norm() > initial_population + 1e-12)
    throw std::invalid_argument("mode norm exceeds the population available for emission");
  auto uncapped = [mode, initial_population](double t) {
    if (t < mode.t_start() || t > mode.t_end()) return 0.0;
    double den = initial_population - mode.cumulative(t);
    double num = mode.intensity(t);
    if (den <= 0) return num > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return num / den;
  };
  CouplerSchedule s;
  s.kappa_max = kappa_max;
  s.direction = Direction::emit;
  s.t_start = mode.t_start();
  s.t_end = mode.t_end();
  s.kappa = [uncapped, kappa_max](double t) { return std::min(uncapped(t), kappa_max); };
  diagnose(s, uncapped);
  return s;
}

CouplerSchedule capture_schedule(const TemporalMode& incoming, double kappa_max, double initial_population) {
  if (!(kappa_max > 0)) throw std::invalid_argument("kappa_max must be positive");
  if (initial_population < 0 || initial_population + incoming.norm() > 1.0 + 1e-12)
    throw std::invalid_argument("capture would exceed unit population");
  auto uncapped = [incoming, initial_population](double t) {
    if (t < incoming.t_start() || t > incoming.t_end()) return 0.0;
    double den = initial_population + incoming.cumulative(t);
    double num = incoming.intensity(t);
    if (den <= 0) return num > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return num / den;
  };
  CouplerSchedule s;
  s.kappa_max = kappa_max;
  s.direction = Direction::capture;
  s.t_start = incoming.t_start();
  s.t_end = incoming.t_end();
  s.kappa = [uncapped, kappa_max](double t) { return std::min(uncapped(t), kappa_max); };
  diagnose(s, uncapped);
  return s;
}

CouplerSchedule constant_schedule(double kappa, double t_start, double t_end) {
  if (!(kappa >= 0)) throw std::invalid_argument("kappa must be non-negative");
  CouplerSchedule s;
  s.kappa_max = kappa;
  s.peak_kappa = kappa;
  s.t_start = t_start;
  s.t_end = t_end;
  s.breaks = {t_start, t_end};
  s.kappa = [=](double t) { return (t >= t_start && t <= t_end) ? kappa : 0.0; };
  return s;
}

CouplerSchedule off_schedule() {
  CouplerSchedule s;
  s.kappa = [](double) { return 0.0; };
  return s;
}

std::vector<std::pair<double, double>> sample_schedule(const CouplerSchedule& s, double dt) {
  std::vector<std::pair<double, double>> out;
  if (!(dt > 0) || !(s.t_end > s.t_start)) return out;
  auto n = static_cast<long>(std::ceil((s.t_end - s.t_start) / dt));
  for (long i = 0; i <= n; ++i) {
    double t = std::min(s.t_start + double(i) * dt, s.t_end);
    out.emplace_back(t * 1e9, s(t) / (2 * 3.14159265358979323846) / 1e6);
  }
  return out;
}

std::string schedule_json(const CouplerSchedule& s, double dt) {
  nlohmann::json j = nlohmann::json::array();
  for (auto [t, k] : sample_schedule(s, dt)) j.push_back({t, k});
  return j.dump();
}

NodeRun simulate_node(const CouplerSchedule& s, cd a0, const std::function<cd(double)>& input, double t0, double t1,
                      double dt, double polarity, double gamma) {
  if (!(t1 > t0) || !(dt > 0)) throw std::invalid_argument("invalid node grid");
  auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  dt = (t1 - t0) / double(n);
  auto in = [&](double t) { return input ? input(t) : cd(0.0); };
  auto rhs = [&](double t, cd a) {
    double k = s(t);
    return -(0.5 * k + 0.5 * gamma) * a - polarity * std::sqrt(k) * in(t);
  };
  NodeRun r;
  r.t.reserve(n + 1);
  cd a = a0;
  for (std::size_t i = 0; i <= n; ++i) {
    double t = t0 + double(i) * dt;
    r.t.push_back(t);
    r.a.push_back(a);
    r.out.push_back(in(t) + polarity * std::sqrt(s(t)) * a);
    if (i == n) break;
    cd k1 = rhs(t, a);
    cd k2 = rhs(t + 0.5 * dt, a + 0.5 * dt * k1);
    cd k3 = rhs(t + 0.5 * dt, a + 0.5 * dt * k2);
    cd k4 = rhs(t + dt, a + dt * k3);
    a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return r;
}

}  // namespace phonon::pulse
