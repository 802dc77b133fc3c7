#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "phonon/netsim.hpp"

namespace phonon::netsim {

namespace {

struct NodeCoupling {
  const NodeParams* p;
  double polarity;
  double trans;  // |t|
  double gamma_fixed;
  double dephase;
  double omega;  // detuning in rad/s

  // Emission into the channel and absorption from it.
  void at(double t, double& c_out, double& c_in, double& half_kappa) const {
    double k = p->schedule(t);
    double kd = std::sqrt(k * p->directivity);
    double ko = std::sqrt(k * (1 - p->directivity));
    c_out = polarity * kd;
    // c_in multiplies the complex reflection, handled by the caller.
    c_in = polarity * ko * trans;
    half_kappa = 0.5 * k;
  }
};

// A time point of the field lines: every grid point plus every coefficient breakpoint and its arrivals
// at the far node. Signals are smooth between consecutive break knots.
struct Knot {
  double t;
  long grid = -1;  // grid index, -1 for an off-grid breakpoint
  bool brk = false;
  long src = -1;   // knot emitting what arrives here; -1 nothing in the window, -2 off the knots
  long gfloor = 0, gceil = 0;  // nearest grid indices at or below and at or above
};

// Per node: coupler terms, damping g, detuning w and dephasing jump rate j. Zero before preparation.
struct Coef {
  double co1, ci1, hk1, g1, w1, j1;
  double co2, ci2, hk2, g2, w2, j2;
};

struct Spawn {
  std::size_t start;
  int qubit;
  double weight;
  std::vector<double> ramp;  // recorded weight on the first steps; jumps only count once they happened
};

struct Accum {
  std::vector<double> pe1, pe2, energy;
  double arrived1 = 0, arrived2 = 0;
  std::vector<double> jump[2];  // jump weight per grid step and qubit

  explicit Accum(std::size_t n) : pe1(n, 0.0), pe2(n, 0.0), energy(n, 0.0) {
    jump[0].assign(n, 0.0);
    jump[1].assign(n, 0.0);
  }
};

struct Setup {
  NodeCoupling n1, n2;
  std::size_t steps, cells;
  double dt, tau, loss_amp, field_decay;  // field_decay: energy loss rate in flight, 1/s
  std::vector<double> t;
  std::vector<std::vector<std::pair<int, double>>> kicks;  // per knot: (qubit, phase)
  BranchOptions br;
  std::size_t bin, nodes;
  std::vector<std::size_t> snap_idx;
  double prep = -std::numeric_limits<double>::infinity();
  std::vector<Knot> knots;
  std::vector<long> grid_knot, prev_brk, next_brk;

  std::size_t node_step(std::size_t i) const { return std::min(i * bin, steps); }

  void build_knots(std::vector<double> base) {
    const double eps = 1e-9 * dt, t0 = t.front(), t1 = t.back();
    std::vector<double> extra;
    std::vector<char> grid_brk(steps + 1, 0);
    for (double b : base)
      for (double e = b; e < t1 - eps; e += tau) {
        if (e <= t0 + eps) continue;
        double kf = (e - t0) / dt;
        auto k = std::size_t(std::llround(kf));
        if (std::abs(e - t[k]) <= eps)
          grid_brk[k] = 1;
        else
          extra.push_back(e);
      }
    std::sort(extra.begin(), extra.end());
    std::vector<double> ex;
    for (double e : extra)
      if (ex.empty() || e - ex.back() > eps) ex.push_back(e);
    grid_knot.assign(steps + 1, 0);
    std::size_t j = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
      for (; j < ex.size() && ex[j] < t[k]; ++j) {
        Knot x;
        x.t = ex[j];
        x.brk = true;
        x.gfloor = long(k) - 1;
        x.gceil = long(k);
        knots.push_back(x);
      }
      Knot g;
      g.t = t[k];
      g.grid = long(k);
      g.brk = grid_brk[k];
      g.gfloor = g.gceil = long(k);
      grid_knot[k] = long(knots.size());
      knots.push_back(g);
    }
    for (auto& x : knots) {
      if (x.grid >= 0) {
        x.src = x.grid >= long(cells) ? grid_knot[std::size_t(x.grid) - cells] : -1;
        continue;
      }
      double want = x.t - tau;
      if (want < t0 - eps) continue;
      auto it = std::lower_bound(knots.begin(), knots.end(), want - eps, [](const Knot& a, double v) { return a.t < v; });
      x.src = (it != knots.end() && it->t <= want + eps) ? long(it - knots.begin()) : -2;
    }
    const long nk = long(knots.size());
    prev_brk.assign(std::size_t(nk), 0);
    next_brk.assign(std::size_t(nk), nk - 1);
    for (long i = 0, p = 0; i < nk; ++i) {
      if (knots[std::size_t(i)].brk) p = i;
      prev_brk[std::size_t(i)] = p;
    }
    for (long i = nk - 1, q = nk - 1; i >= 0; --i) {
      if (knots[std::size_t(i)].brk) q = i;
      next_brk[std::size_t(i)] = q;
    }
  }

  std::vector<Coef> c_left[2], c_right[2], c_mid[2];  // indexed by whether dephasing is on

  Coef coef(double t, bool dephase) const {
    Coef c;
    const double on = t >= prep ? 1.0 : 0.0;
    n1.at(t, c.co1, c.ci1, c.hk1);
    n2.at(t, c.co2, c.ci2, c.hk2);
    c.co1 *= on, c.ci1 *= on, c.hk1 *= on, c.co2 *= on, c.ci2 *= on, c.hk2 *= on;
    c.g1 = on * (n1.gamma_fixed + (dephase ? n1.dephase : 0.0));
    c.g2 = on * (n2.gamma_fixed + (dephase ? n2.dephase : 0.0));
    c.w1 = on * n1.omega;
    c.w2 = on * n2.omega;
    c.j1 = dephase ? on * 2 * n1.dephase : 0.0;
    c.j2 = dephase ? on * 2 * n2.dephase : 0.0;
    return c;
  }

  void build_coefs() {
    const double eps = 1e-9 * dt;
    for (int d = 0; d < 2; ++d) {
      c_left[d].clear(), c_right[d].clear(), c_mid[d].clear();
      for (std::size_t i = 0; i < knots.size(); ++i) {
        const Knot& x = knots[i];
        c_left[d].push_back(coef(x.brk ? x.t - eps : x.t, d));
        c_right[d].push_back(x.brk ? coef(x.t + eps, d) : c_left[d].back());
        if (i + 1 < knots.size()) c_mid[d].push_back(coef(0.5 * (x.t + knots[i + 1].t), d));
      }
    }
  }
};

struct BranchRun {
  cd a1_final, a2_final;
  std::vector<FieldState> snaps;
};

BranchRun run_branch(const Setup& s, std::size_t start, cd a1, cd a2, double weight, const std::vector<double>& ramp,
                     bool dephase, Accum& acc, bool want_snaps) {
  const auto& kn = s.knots;
  const long nk = long(kn.size());
  const long k0 = s.grid_knot[start];
  const long cells = long(s.cells), g0 = long(start);
  // Right and left limits of the outgoing fields on every knot; they differ only at steps.
  std::vector<cd> o1r(std::size_t(nk), 0.0), o1l(std::size_t(nk), 0.0), o2r(std::size_t(nk), 0.0),
      o2l(std::size_t(nk), 0.0);
  const cd r1 = s.n1.p->reflection, r2 = s.n2.p->reflection;

  // The branch starts from vacuum, so its start and every arrival of that edge are steps too.
  auto piece_lo = [&](long i) {
    long p = s.prev_brk[std::size_t(i)];
    long gf = kn[std::size_t(i)].gfloor;
    if (gf >= g0) p = std::max(p, s.grid_knot[std::size_t(g0 + (gf - g0) / cells * cells)]);
    return std::max(p, k0);
  };
  auto piece_hi = [&](long i) {
    long q = s.next_brk[std::size_t(i)];
    long gc = std::max(kn[std::size_t(i)].gceil, g0);
    long g = g0 + (gc - g0 + cells - 1) / cells * cells;
    if (g <= long(s.steps)) q = std::min(q, s.grid_knot[std::size_t(g)]);
    return q;
  };

  // Lagrange through up to four knots of the piece [lo, hi] around the segment starting at q.
  auto lagrange = [&](long lo, long hi, long q, double t, auto&& val) -> cd {
    if (hi <= lo) return val(lo, lo, hi);
    long a = std::max(lo, std::min(q - 1, hi - 3));
    long b = std::min(hi, a + 3);
    cd sum = 0;
    for (long j = a; j <= b; ++j) {
      double w = 1;
      for (long m = a; m <= b; ++m)
        if (m != j) w *= (t - kn[std::size_t(m)].t) / (kn[std::size_t(j)].t - kn[std::size_t(m)].t);
      sum += w * val(j, lo, hi);
    }
    return sum;
  };
  // Outgoing field of one node at an arbitrary time, using knots up to `known`.
  auto out_at = [&](int node, double t, long known) -> cd {
    const auto& orr = node == 1 ? o1r : o2r;
    const auto& oll = node == 1 ? o1l : o2l;
    auto it = std::upper_bound(kn.begin(), kn.end(), t, [](double v, const Knot& x) { return v < x.t; });
    long q = std::max(k0, long(it - kn.begin()) - 1);
    long lo = piece_lo(q), hi = std::min(piece_hi(q), known);
    return lagrange(lo, hi, q, t, [&](long j, long plo, long phi) {
      return j == phi && j != plo ? oll[std::size_t(j)] : orr[std::size_t(j)];
    });
  };
  // Field arriving at a node on knot i; left selects the limit from below.
  auto input = [&](int node, long i, bool left, long known) -> cd {
    long src = kn[std::size_t(i)].src;
    if (src == -1) return 0.0;
    if (src == -2) {
      double t = kn[std::size_t(i)].t - s.tau;
      return t < kn[std::size_t(k0)].t ? cd(0.0) : s.loss_amp * out_at(node == 1 ? 2 : 1, t, known);
    }
    if (src < k0) return 0.0;
    const auto& o = node == 1 ? (left ? o2l : o2r) : (left ? o1l : o1r);
    return s.loss_amp * o[std::size_t(src)];
  };

  // Coefficients are shared by all branches: left and right limits on every knot, midpoint per segment.
  const auto& c_left = s.c_left[dephase], &c_right = s.c_right[dephase], &c_mid = s.c_mid[dephase];
  const double eps = 1e-9 * s.dt;
  // Absorption coefficient: polarity (sqrt(kD) r + sqrt(k(1-D)) t)
  auto absorb1 = [&](const Coef& c) { return c.co1 * r1 + c.ci1; };
  auto absorb2 = [&](const Coef& c) { return c.co2 * r2 + c.ci2; };

  auto deposit = [&](int q, std::size_t k, double w) { acc.jump[q][k] += w; };

  // In-flight energy: trapezoid per segment, attenuated from its midpoint, dropped once it has arrived.
  struct Seg {
    double end, mid, e;
  };
  std::vector<Seg> flight;
  std::size_t flight_head = 0;
  double energy = 0;
  auto fly = [&](double ta, double tb, double e) {
    energy = energy * std::exp(-s.field_decay * (tb - ta)) + e * std::exp(-s.field_decay * 0.5 * (tb - ta));
    flight.push_back({tb, 0.5 * (ta + tb), e});
    while (flight_head < flight.size() && flight[flight_head].end + s.tau <= tb + eps) {
      const Seg& g = flight[flight_head++];
      energy -= g.e * std::exp(-s.field_decay * (tb - g.mid));
    }
  };

  BranchRun res;
  std::size_t snap_next = 0;
  auto snapshot = [&](std::size_t k) {
    while (want_snaps && snap_next < s.snap_idx.size() && s.snap_idx[snap_next] == k) {
      FieldState f;
      f.time = s.t[k];
      f.a1 = a1;
      f.a2 = a2;
      f.right.resize(s.cells);
      f.left.resize(s.cells);
      double norm = std::norm(a1) + std::norm(a2);
      const double cell_decay = 0.5 * s.field_decay * s.dt;
      for (std::size_t j = 0; j < s.cells; ++j) {
        f.right[j] = (k >= j + start) ? o1r[std::size_t(s.grid_knot[k - j])] * std::exp(-cell_decay * double(j))
                                      : cd(0.0);
        std::size_t back = s.cells - j;
        f.left[j] = (k >= back + start)
                        ? o2r[std::size_t(s.grid_knot[k - back])] * std::exp(-cell_decay * double(back))
                        : cd(0.0);
        norm += (std::norm(f.right[j]) + std::norm(f.left[j])) * s.dt;
      }
      f.vacuum = std::max(0.0, 1.0 - norm);
      res.snaps.push_back(std::move(f));
      ++snap_next;
    }
  };
  if (want_snaps)
    while (snap_next < s.snap_idx.size() && s.snap_idx[snap_next] < start) ++snap_next;

  auto apply_kicks = [&](long i) {
    for (auto [q, ph] : s.kicks[std::size_t(i)]) (q == 1 ? a1 : a2) *= std::polar(1.0, ph);
  };
  auto record = [&](std::size_t k) {
    const double w = k - start < ramp.size() ? ramp[k - start] : weight;
    acc.pe1[k] += w * std::norm(a1);
    acc.pe2[k] += w * std::norm(a2);
    acc.energy[k] += w * std::max(0.0, energy);
    snapshot(k);
  };

  apply_kicks(k0);
  Coef ca = c_right[std::size_t(k0)];
  o1r[std::size_t(k0)] = r1 * input(1, k0, false, k0) + ca.co1 * a1;
  o2r[std::size_t(k0)] = r2 * input(2, k0, false, k0) + ca.co2 * a2;
  record(start);
  double w1 = 0, w2 = 0;
  for (long i = k0; i + 1 < nk; ++i) {
    const Knot& ka = kn[std::size_t(i)];
    const Knot& kb = kn[std::size_t(i + 1)];
    const double h = kb.t - ka.t, tm = 0.5 * (ka.t + kb.t);
    const long lo = piece_lo(i), hi = piece_hi(i + 1);
    auto in_stage = [&](int node) {
      std::array<cd, 3> v;
      v[0] = input(node, i, false, i);
      v[2] = input(node, i + 1, true, i);
      v[1] = lagrange(lo, hi, i, tm, [&](long j, long plo, long phi) { return input(node, j, j == phi && j != plo, i); });
      return v;
    };
    const auto in1 = in_stage(1), in2 = in_stage(2);
    const Coef& fm = c_mid[std::size_t(i)];
    const Coef& cl = c_left[std::size_t(i + 1)];
    const Coef* cs[3] = {&ca, &fm, &cl};
    auto rk = [&](cd x0, const std::array<cd, 3>& in, int node) {
      auto f = [&](int stage, cd x) -> cd {
        const Coef& c = *cs[stage];
        if (node == 1) return -(c.hk1 + c.g1 + cd(0, c.w1)) * x - absorb1(c) * in[std::size_t(stage)];
        return -(c.hk2 + c.g2 + cd(0, c.w2)) * x - absorb2(c) * in[std::size_t(stage)];
      };
      cd k1 = f(0, x0);
      cd k2 = f(1, x0 + 0.5 * h * k1);
      cd k3 = f(1, x0 + 0.5 * h * k2);
      cd k4 = f(2, x0 + h * k3);
      cd x1 = x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      // Hermite midpoint from the end slopes, for a fourth-order jump weight.
      cd mid = 0.5 * (x0 + x1) + h / 8.0 * (k1 - f(2, x1));
      return std::pair{x1, mid};
    };
    const double p1 = std::norm(a1), p2 = std::norm(a2);
    const auto [n1, m1] = rk(a1, in1, 1);
    const auto [n2, m2] = rk(a2, in2, 2);
    a1 = n1;
    a2 = n2;
    w1 += h / 6.0 * (ca.j1 * p1 + 4 * fm.j1 * std::norm(m1) + cl.j1 * std::norm(a1));
    w2 += h / 6.0 * (ca.j2 * p2 + 4 * fm.j2 * std::norm(m2) + cl.j2 * std::norm(a2));

    const auto b = std::size_t(i + 1);
    o1l[b] = r1 * in1[2] + cl.co1 * a1;
    o2l[b] = r2 * in2[2] + cl.co2 * a2;
    apply_kicks(i + 1);
    const Coef& cr = c_right[std::size_t(i + 1)];
    o1r[b] = r1 * input(1, i + 1, false, i) + cr.co1 * a1;
    o2r[b] = r2 * input(2, i + 1, false, i) + cr.co2 * a2;
    const auto a = std::size_t(i);
    fly(ka.t, kb.t, 0.5 * h * (std::norm(o1r[a]) + std::norm(o2r[a]) + std::norm(o1l[b]) + std::norm(o2l[b])));
    acc.arrived1 += weight * 0.5 * h * (std::norm(in1[0]) + std::norm(in1[2]));
    acc.arrived2 += weight * 0.5 * h * (std::norm(in2[0]) + std::norm(in2[2]));
    ca = cr;
    if (kb.grid >= 0) {
      const auto k = std::size_t(kb.grid);
      if (w1 > 0) deposit(0, k, weight * w1);
      if (w2 > 0) deposit(1, k, weight * w2);
      w1 = w2 = 0;
      record(k);
    }
  }
  res.a1_final = a1;
  res.a2_final = a2;
  return res;
}

}  // namespace

FieldResult run_single_excitation(const NodeParams& node1, const NodeParams& node2, const ChannelParams& channel,
                                  const qmath::TimeGrid& grid, cd a1_0, cd a2_0, const FieldOptions& opts) {
  node1.validate();
  node2.validate();
  channel.validate();
  if (std::norm(a1_0) + std::norm(a2_0) > 1 + 1e-12)
    throw EngineError("the field engine holds at most one excitation");

  Setup s;
  s.dt = grid.dt();
  s.cells = delay_cells(channel, s.dt);
  s.steps = grid.steps();
  s.tau = double(s.cells) * s.dt;
  s.loss_amp = std::exp(-0.5 * channel.loss_alpha * channel.length);
  s.field_decay = channel.loss_alpha * channel.velocity;
  s.br = opts.branches;
  if (s.br.bin_steps < 1) throw EngineError("restart node spacing must be at least one step");
  s.bin = std::size_t(s.br.bin_steps);
  s.nodes = (s.steps + s.bin - 1) / s.bin + 1;
  s.t.resize(s.steps + 1);
  for (std::size_t k = 0; k <= s.steps; ++k) s.t[k] = grid.at(k);
  auto make = [](const NodeParams& p, double pol) {
    NodeCoupling c;
    c.p = &p;
    c.polarity = pol;
    c.trans = std::sqrt(std::max(0.0, 1.0 - std::norm(p.reflection)));
    c.gamma_fixed = 0.5 * p.decay_rate();
    c.dephase = p.dephasing_rate();
    c.omega = 2 * M_PI * p.detuning;
    return c;
  };
  s.n1 = make(node1, 1.0);
  s.n2 = make(node2, opts.receiver_polarity);
  s.prep = opts.prepare_time;
  std::vector<double> base = node1.schedule.breaks;
  base.insert(base.end(), node2.schedule.breaks.begin(), node2.schedule.breaks.end());
  if (std::isfinite(s.prep)) base.push_back(s.prep);
  for (const auto& k : opts.kicks) {
    if (k.qubit != 1 && k.qubit != 2) throw EngineError("phase kicks target qubit 1 or 2");
    if (k.time < grid.t0() || k.time > grid.t1()) throw EngineError("phase kick outside the simulated window");
    // A kick makes the emitted field jump, so it is a breakpoint.
    base.push_back(k.time);
  }
  s.build_knots(base);
  s.build_coefs();
  s.kicks.assign(s.knots.size(), {});
  for (const auto& k : opts.kicks) {
    auto it = std::lower_bound(s.knots.begin(), s.knots.end(), k.time - 1e-9 * s.dt,
                               [](const Knot& a, double v) { return a.t < v; });
    if (it == s.knots.end()) --it;
    s.kicks[std::size_t(it - s.knots.begin())].push_back({k.qubit, k.phase});
  }
  for (double t : opts.snapshot_times) {
    double kf = (t - grid.t0()) / s.dt;
    if (kf < -0.5 || kf > double(s.steps) + 0.5) throw EngineError("snapshot time outside the simulated window");
    s.snap_idx.push_back(std::size_t(std::llround(std::max(0.0, kf))));
  }
  std::sort(s.snap_idx.begin(), s.snap_idx.end());

  const std::size_t n = s.steps + 1;
  FieldResult out;
  out.dt = s.dt;
  out.cells = s.cells;
  Trajectory& tr = out.trajectory;
  tr.times = s.t;
  tr.pe_q1.assign(n, 0.0);
  tr.pe_q2.assign(n, 0.0);
  tr.field_energy.assign(n, 0.0);

  std::vector<double> pending[2] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  auto merge = [&](const Accum& a) {
    for (std::size_t k = 0; k < n; ++k) {
      tr.pe_q1[k] += a.pe1[k];
      tr.pe_q2[k] += a.pe2[k];
      tr.field_energy[k] += a.energy[k];
    }
    out.arrived_q1 += a.arrived1;
    out.arrived_q2 += a.arrived2;
    for (int q = 0; q < 2; ++q)
      for (std::size_t k = 0; k < n; ++k) pending[q][k] += a.jump[q][k];
  };
  // Turns the merged jumps into the next level. A jump between two restart nodes is shared
  // linearly between them. Until the later node starts, the earlier one carries the whole jump,
  // so recorded populations never count a jump before it happened.
  auto take_level = [&]() {
    std::vector<Spawn> lv;
    for (int q = 0; q < 2; ++q) {
      double carried = 0;  // shares handed over from the previous bin
      for (std::size_t i = 0; i < s.nodes; ++i) {
        const std::size_t a = s.node_step(i);
        const std::size_t b = i + 1 < s.nodes ? s.node_step(i + 1) : n;
        const bool last = i + 1 >= s.nodes || b <= a;
        Spawn sp{a, q + 1, 0.0, {}};
        double active = carried, handed = 0;
        for (std::size_t k = a; k < b; ++k) {
          const double j = pending[q][k];
          pending[q][k] = 0;
          active += j;
          if (!last) handed += j * double(k - a) / double(b - a);
          sp.ramp.push_back(active);
        }
        sp.weight = active - handed;
        carried = handed;
        if (sp.weight <= 0) continue;
        if (sp.weight < s.br.min_weight) {
          out.branches.dropped_weight += sp.weight;
          continue;
        }
        lv.push_back(std::move(sp));
      }
    }
    return lv;
  };

  const bool dephasing = s.br.enabled && s.br.max_depth > 0;
  std::vector<Spawn> level;
  {
    Accum a(n);
    BranchRun main = run_branch(s, 0, a1_0, a2_0, 1.0, {}, dephasing, a, true);
    out.a1_final = main.a1_final;
    out.a2_final = main.a2_final;
    out.snapshots = std::move(main.snaps);
    merge(a);
    level = take_level();
  }
  // Incoherent restarts, one level at a time. Fixed chunks keep the summation order
  // independent of the number of workers.
  constexpr std::size_t kChunk = 32;
  int depth = 0;
  while (!level.empty()) {
    ++depth;
    out.branches.count += level.size();
    const bool deph = dephasing && depth < s.br.max_depth;
    const std::size_t chunks = (level.size() + kChunk - 1) / kChunk;
    // Accumulators are folded in chunk order in batches to bound memory.
    const std::size_t batch = std::max<std::size_t>(1, std::size_t(4 * worker_count()));
    for (std::size_t b0 = 0; b0 < chunks; b0 += batch) {
      std::size_t nb = std::min(batch, chunks - b0);
      std::vector<Accum> accs(nb, Accum(n));
      for_each_index(nb, opts.exec, [&](std::size_t i) {
        std::size_t c = b0 + i;
        for (std::size_t j = c * kChunk; j < std::min(level.size(), (c + 1) * kChunk); ++j) {
          const Spawn& sp = level[j];
          cd a1 = sp.qubit == 1 ? cd(1.0) : cd(0.0);
          cd a2 = sp.qubit == 2 ? cd(1.0) : cd(0.0);
          run_branch(s, sp.start, a1, a2, sp.weight, sp.ramp, deph, accs[i], false);
        }
      });
      for (std::size_t i = 0; i < nb; ++i) merge(accs[i]);
    }
    level = take_level();
  }
  out.branches.depth = depth;
  return out;
}

}  // namespace phonon::netsim
