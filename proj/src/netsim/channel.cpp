#include <algorithm>
#include <cmath>

#include "phonon/netsim.hpp"

namespace phonon::netsim {

void ChannelParams::validate() const {
  if (!(length > 0) || !(velocity > 0)) throw std::invalid_argument("channel length and velocity must be positive");
  if (!(loss_alpha >= 0) || !std::isfinite(loss_alpha)) throw std::invalid_argument("channel loss must be finite and non-negative");
}

double ChannelParams::transmission() const { return std::exp(-loss_alpha * length); }

double ChannelParams::decay_time() const {
  return loss_alpha > 0 ? 1.0 / (loss_alpha * velocity) : std::numeric_limits<double>::infinity();
}

void NodeParams::validate() const {
  if (!(t1 > 0) || !(t2_ramsey > 0) || !(t2_echo > 0)) throw std::invalid_argument("coherence times must be positive");
  if (t2_ramsey > 2 * t1 * (1 + 1e-12)) throw std::invalid_argument("T2 (Ramsey) exceeds 2 T1");
  if (directivity < 0 || directivity > 1) throw std::invalid_argument("directivity fraction must lie in [0, 1]");
  if (std::abs(reflection) > 1 + 1e-12) throw std::invalid_argument("reflection magnitude exceeds 1");
  if (!schedule.kappa) throw std::invalid_argument("node has no coupler schedule");
}

double NodeParams::decay_rate() const { return std::isfinite(t1) ? 1.0 / t1 : 0.0; }

double NodeParams::dephasing_rate() const {
  return qmath::pure_dephasing_rate(t1, dephasing == DephasingSource::echo ? t2_echo : t2_ramsey);
}

std::size_t Trajectory::index_of(double t) const {
  if (times.empty()) throw std::out_of_range("empty trajectory");
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  std::size_t i = std::size_t(it - times.begin());
  if (i > 0 && std::abs(times[i - 1] - t) <= std::abs(times[i] - t)) --i;
  return i;
}

double commensurate_dt(const ChannelParams& ch, double dt_target) {
  ch.validate();
  if (!(dt_target > 0)) throw std::invalid_argument("dt must be positive");
  double n = std::ceil(ch.delay() / dt_target - 1e-9);
  return ch.delay() / std::max(1.0, n);
}

std::size_t delay_cells(const ChannelParams& ch, double dt) {
  double n = ch.delay() / dt;
  auto cells = static_cast<std::size_t>(std::llround(n));
  if (cells < 2 || std::abs(n - double(cells)) > 1e-6)
    throw EngineError("time step is incommensurate with the channel: v dt must divide the length");
  return cells;
}

}  // namespace phonon::netsim
