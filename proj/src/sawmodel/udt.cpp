#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phonon/sawmodel.hpp"

namespace phonon::saw {

namespace {

cd wavenumber(double f, double v, double alpha) { return cd(2 * M_PI * f / v, -0.5 * alpha); }

std::size_t bracket(const std::vector<double>& f, double x) {
  if (f.empty() || x < f.front() || x > f.back()) throw std::out_of_range("frequency outside the response grid");
  auto it = std::upper_bound(f.begin(), f.end(), x);
  std::size_t i = it == f.begin() ? 0 : std::size_t(it - f.begin()) - 1;
  return std::min(i, f.size() > 1 ? f.size() - 2 : 0);
}

template <class T>
T interp(const std::vector<double>& f, const std::vector<T>& y, double x) {
  std::size_t i = bracket(f, x);
  if (f.size() == 1) return y[0];
  double w = (x - f[i]) / (f[i + 1] - f[i]);
  return y[i] * (1 - w) + y[i + 1] * w;
}

}  // namespace

void IDTParams::validate() const {
  if (cells < 1) throw std::invalid_argument("IDT needs at least one cell");
  if (!(metallization_ratio > 0 && metallization_ratio < 1)) throw std::invalid_argument("metallization ratio must lie in (0, 1)");
  if (std::abs(reflectivity) > 1) throw std::invalid_argument("IDT reflectivity exceeds 1");
  if (!(wavelength > 0) || !(velocity > 0)) throw std::invalid_argument("IDT wavelength and velocity must be positive");
}

void MirrorParams::validate() const {
  if (electrodes < 1) throw std::invalid_argument("mirror needs at least one electrode");
  if (std::abs(reflectivity) > 1) throw std::invalid_argument("mirror reflectivity exceeds 1");
  if (!(wavelength > 0)) throw std::invalid_argument("mirror wavelength must be positive");
}

PMatrix idt_pmatrix(const IDTParams& p, double f, double loss_alpha) {
  if (!(f > 0)) throw std::invalid_argument("frequency must be positive");
  p.validate();
  cd k = wavenumber(f, p.velocity, loss_alpha);
  PMatrix half = propagation(k * (0.5 * p.wavelength));
  PMatrix cell = cascade(cascade(half, element(p.reflectivity, p.transduction)), half);
  return power(cell, p.cells);
}

PMatrix mirror_pmatrix(const MirrorParams& p, double v_free, double f, double loss_alpha) {
  if (!(f > 0)) throw std::invalid_argument("frequency must be positive");
  p.validate();
  // One electrode per half wavelength.
  cd k = wavenumber(f, p.velocity(v_free), loss_alpha);
  PMatrix quarter = propagation(k * (0.25 * p.wavelength));
  PMatrix cell = cascade(cascade(quarter, element(p.reflectivity, 0.0)), quarter);
  return power(cell, p.electrodes);
}

PMatrix udt_pmatrix(const UDTParams& p, double f) {
  PMatrix m = mirror_pmatrix(p.mirror, p.v_free, f, p.loss_alpha);
  PMatrix gap = propagation(wavenumber(f, p.v_free, p.loss_alpha) * p.d_eff);
  PMatrix idt = idt_pmatrix(p.idt, f, p.loss_alpha);
  return cascade(cascade(m, gap), idt);
}

std::vector<double> frequency_grid(double f_lo, double f_hi, double df) {
  if (!(f_hi > f_lo) || !(df > 0)) throw std::invalid_argument("invalid frequency grid");
  auto n = static_cast<std::size_t>(std::llround((f_hi - f_lo) / df));
  std::vector<double> f(n + 1);
  for (std::size_t i = 0; i <= n; ++i) f[i] = f_lo + double(i) * (f_hi - f_lo) / double(n);
  return f;
}

UDTResponse udt_response(const UDTParams& p, const std::vector<double>& f, Exec exec) {
  if (f.empty()) throw std::invalid_argument("empty frequency grid");
  if (!std::is_sorted(f.begin(), f.end())) throw std::invalid_argument("frequency grid must be ascending");
  const double g_ref = udt_pmatrix(p, p.f_ref)(2, 2).real();
  UDTResponse r;
  const std::size_t n = f.size();
  r.f = f;
  r.forward.resize(n);
  r.backward.resize(n);
  r.reflection.resize(n);
  r.directivity_db.resize(n);
  r.conductance.resize(n);
  r.kappa_udt.resize(n);
  for_each_index(n, exec, [&](std::size_t i) {
    PMatrix m = udt_pmatrix(p, f[i]);
    r.forward[i] = m(1, 2);
    r.backward[i] = m(0, 2);
    r.reflection[i] = m(1, 1);
    r.directivity_db[i] = 10 * std::log10(std::norm(m(1, 2)) / std::norm(m(0, 2)));
    r.conductance[i] = m(2, 2).real();
    r.kappa_udt[i] = std::max(0.0, p.kappa_ref * m(2, 2).real() / g_ref);
  });
  return r;
}

double directivity_fraction_db(double directivity_db) {
  double ratio = std::pow(10.0, directivity_db / 10.0);
  return ratio / (1.0 + ratio);
}

double directivity_fraction(const UDTResponse& r, double f) {
  std::size_t i = bracket(r.f, f);
  auto frac = [&](std::size_t k) {
    double a = std::norm(r.forward[k]), b = std::norm(r.backward[k]);
    return a / (a + b);
  };
  if (r.f.size() == 1) return frac(0);
  double w = (f - r.f[i]) / (r.f[i + 1] - r.f[i]);
  return frac(i) * (1 - w) + frac(i + 1) * w;
}

cd reflection_at(const UDTResponse& r, double f) { return interp(r.f, r.reflection, f); }

double kappa_at(const UDTResponse& r, double f) { return interp(r.f, r.kappa_udt, f); }

Notch find_notch(const UDTResponse& r, double f_lo, double f_hi) {
  std::size_t lo = 0, hi = r.f.size();
  while (lo < r.f.size() && r.f[lo] < f_lo) ++lo;
  while (hi > 0 && r.f[hi - 1] > f_hi) --hi;
  if (hi <= lo + 2) throw std::invalid_argument("notch search window holds too few points");
  std::vector<double> fwd(r.f.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) fwd[i] = std::norm(r.forward[i]);
  double peak = 0;
  for (std::size_t i = lo; i < hi; ++i) peak = std::max(peak, fwd[i]);
  // Deepest interior local minimum of the forward emission.
  std::size_t best = lo + 1;
  for (std::size_t i = lo + 1; i + 1 < hi; ++i)
    if (fwd[i] <= fwd[i - 1] && fwd[i] <= fwd[i + 1] && fwd[i] < fwd[best]) best = i;
  double thr = 0.1 * peak;
  std::size_t a = best, b = best;
  while (a > lo && fwd[a - 1] < thr) --a;
  while (b + 1 < hi && fwd[b + 1] < thr) ++b;
  Notch n;
  n.frequency = r.f[best];
  n.width = fwd[best] < thr ? r.f[b] - r.f[a] : 0.0;
  n.depth_db = 10 * std::log10(peak / fwd[best]);
  return n;
}

}  // namespace phonon::saw
