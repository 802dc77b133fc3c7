#include "phonon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace phonon::analysis {

void DispersiveConfig::validate() const {
  if (delta == 0) throw std::invalid_argument("detuning must be non-zero");
  if (g < 0 || kappa_udt < 0 || kappa_q < 0 || dt < 0) throw std::invalid_argument("rates and durations must be non-negative");
}

double purcell_coupling(double kappa_q, double kappa_udt) {
  if (!(kappa_udt > 0)) throw std::invalid_argument("kappa_udt must be positive");
  if (kappa_q < 0) throw std::invalid_argument("kappa_q must be non-negative");
  return 0.5 * std::sqrt(kappa_q * kappa_udt);
}

double dispersive_shift(double g, double delta) {
  if (delta == 0) throw std::invalid_argument("dispersive shift needs a non-zero detuning");
  return g * g / delta;
}

double dispersive_phase(double chi, double dt) {
  if (dt < 0) throw std::invalid_argument("interaction time must be non-negative");
  return 2 * M_PI * chi * dt;
}

double detuned_purcell_rate(double kappa_q, double kappa_udt, double delta) {
  if (!(kappa_udt > 0)) throw std::invalid_argument("kappa_udt must be positive");
  double x = 2 * delta / kappa_udt;
  return kappa_q / (1 + x * x);
}

double wrap_phase(double x) {
  double y = std::remainder(x, 2 * M_PI);
  return y <= -M_PI ? y + 2 * M_PI : y;
}

FringeFit fit_cosine(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 5) throw std::invalid_argument("cosine fit needs at least 5 samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double x = samples[std::size_t(i)].first;
    a(i, 0) = std::cos(x);
    a(i, 1) = std::sin(x);
    a(i, 2) = 1.0;
    y(i) = samples[std::size_t(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw std::invalid_argument("degenerate sampling for cosine fit");
  Eigen::Vector3d p = qr.solve(y);
  // C + B cos(x - p0) = C + B cos p0 cos x + B sin p0 sin x
  FringeFit f;
  f.amplitude = std::hypot(p(0), p(1));
  f.offset = p(2);
  f.phase0 = wrap_phase(std::atan2(p(1), p(0)));
  f.visibility = f.offset != 0 ? std::clamp(f.amplitude / std::abs(f.offset), 0.0, 1.0) : 0.0;
  Eigen::VectorXd res = y - a * p;
  f.residual_norm = res.norm();
  if (n > 3 && f.amplitude > 0) {
    double s2 = res.squaredNorm() / double(n - 3);
    Eigen::Matrix3d cov = s2 * (a.transpose() * a).inverse();
    // phase0 = atan2(p1, p0); gradient (-p1, p0) / B^2
    Eigen::Vector2d gr(-p(1), p(0));
    gr /= f.amplitude * f.amplitude;
    f.phase0_stderr = std::sqrt(std::max(0.0, gr.dot(cov.topLeftCorner<2, 2>() * gr)));
  }
  return f;
}

DecayFit fit_exponential_decay(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw std::invalid_argument("decay fit needs at least 3 samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd ly(n), t(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [ti, yi] = samples[std::size_t(i)];
    if (!(yi > 0)) throw std::invalid_argument("decay fit needs positive samples");
    t(i) = ti;
    y(i) = yi;
    a(i, 0) = 1.0;
    a(i, 1) = -ti;
    ly(i) = std::log(yi);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 2) throw std::invalid_argument("degenerate sampling for decay fit");
  Eigen::Vector2d p0 = qr.solve(ly);
  if (!(p0(1) > 0)) throw std::invalid_argument("samples do not decay");
  double amp = std::exp(p0(0)), rate = p0(1);
  // Gauss-Newton on (A, rate).
  Eigen::MatrixXd jac(n, 2);
  Eigen::VectorXd r(n);
  for (int it = 0; it < 50; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double e = std::exp(-rate * t(i));
      r(i) = y(i) - amp * e;
      jac(i, 0) = e;
      jac(i, 1) = -amp * t(i) * e;
    }
    Eigen::Vector2d step = jac.colPivHouseholderQr().solve(r);
    amp += step(0);
    rate += step(1);
    if (std::abs(step(0)) <= 1e-15 * std::abs(amp) && std::abs(step(1)) <= 1e-15 * std::abs(rate)) break;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double e = std::exp(-rate * t(i));
    r(i) = y(i) - amp * e;
    jac(i, 0) = e;
    jac(i, 1) = -amp * t(i) * e;
  }
  DecayFit f;
  f.amplitude = amp;
  f.decay_time = 1.0 / rate;
  f.residual_norm = r.norm();
  if (n > 2) {
    double s2 = r.squaredNorm() / double(n - 2);
    Eigen::Matrix2d cov = s2 * (jac.transpose() * jac).inverse();
    f.amplitude_stderr = std::sqrt(std::max(0.0, cov(0, 0)));
    f.decay_time_stderr = std::sqrt(std::max(0.0, cov(1, 1))) / (rate * rate);
  }
  return f;
}

double loss_from_decay_time(double velocity, double t_saw) {
  if (!(velocity > 0) || !(t_saw > 0)) throw std::invalid_argument("velocity and decay time must be positive");
  return 1.0 / (velocity * t_saw);
}

std::string fringe_json(const FringeFit& f) {
  nlohmann::json j{{"amplitude", f.amplitude},   {"offset", f.offset},
                   {"phase0", f.phase0},         {"visibility", f.visibility},
                   {"residual_norm", f.residual_norm}, {"phase0_stderr", f.phase0_stderr}};
  return j.dump();
}

std::string decay_json(const DecayFit& f) {
  nlohmann::json j{{"decay_time", f.decay_time},
                   {"amplitude", f.amplitude},
                   {"residual_norm", f.residual_norm},
                   {"decay_time_stderr", f.decay_time_stderr},
                   {"amplitude_stderr", f.amplitude_stderr}};
  return j.dump();
}

}  // namespace phonon::analysis
