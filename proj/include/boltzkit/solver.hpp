#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "boltzkit/collision.hpp"
#include "boltzkit/spectral.hpp"

namespace boltzkit {

enum class SplitScheme { Strang, Lie };

struct SolverConfig {
  SpectralGrid grid = make_grid(2, 4, 8, 4);
  KernelSpec kernel{};
  double dt = 0.01;
  double t_end = 0.1;
  SplitScheme scheme = SplitScheme::Strang;
  bool collisions = true;  // false runs pure transport

  void validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw ConfigurationError("dt must be positive");
    if (!(t_end >= dt)) throw ConfigurationError("t_end must be at least dt");
    kernel.validate(grid.d());
  }
};

namespace detail {

inline void check_finite(const PhaseField& f, long step) {
  for (auto z : f.data())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InstabilityError(step, "non-finite value after collision substep");
}

/// Zeroes every x-mode with a component on the Nyquist slot. Such modes have no
/// conjugate partner, so transporting them would leave real data.
inline PhaseField drop_x_nyquist(const PhaseField& f) {
  PhaseField h = transform(f, Repr::KV);
  const auto& g = h.grid();
  for (std::size_t ki = 0; ki < g.x_count(); ++ki) {
    const auto id = g.x_index(ki);
    bool nyq = false;
    for (int a = 0; a < g.d(); ++a) nyq = nyq || id[a] == 0;
    if (nyq)
      for (auto& z : h.cell(ki)) z = 0;
  }
  return transform(h, f.repr());
}

/// Explicit midpoint on df/dt = Q(f, f), XV in and out.
inline PhaseField collision_substep(const PhaseField& f, double h, const SolverConfig& cfg, long step) {
  if (!cfg.collisions) return f;
  PhaseField mid = f;
  // Products in x alias onto the Nyquist slot; the filter keeps real data real.
  PhaseField q0 = q_direct(f, f, cfg.kernel);
  q0 *= 0.5 * h;
  mid += q0;
  check_finite(mid, step);
  PhaseField q1 = q_direct(mid, mid, cfg.kernel);
  q1 *= h;
  PhaseField out = f;
  out += q1;
  check_finite(out, step);
  return drop_x_nyquist(out);
}

}  // namespace detail

/// One splitting step of length h (defaults to cfg.dt). XV in and out.
inline PhaseField step(const PhaseField& f, const SolverConfig& cfg, double h = 0, long index = 0) {
  if (f.repr() != Repr::XV) throw ConfigurationError("step expects an XV field");
  if (!(f.grid() == cfg.grid)) throw ConfigurationError("field and solver grid differ");
  if (h == 0) h = cfg.dt;
  if (cfg.scheme == SplitScheme::Strang) {
    PhaseField a = propagate(cfg.collisions ? detail::drop_x_nyquist(f) : f, 0.5 * h);
    PhaseField b = detail::collision_substep(a, h, cfg, index);
    return propagate(b, 0.5 * h);
  }
  return detail::collision_substep(propagate(cfg.collisions ? detail::drop_x_nyquist(f) : f, h), h, cfg, index);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseField> fields;
};

/// Fields at the requested times. Steps of cfg.dt are shortened so every
/// sample time is hit exactly.
inline Trajectory solve(const PhaseField& f0, const SolverConfig& cfg, std::vector<double> sample_times) {
  cfg.validate();
  std::sort(sample_times.begin(), sample_times.end());
  for (double t : sample_times)
    if (t < 0 || t > cfg.t_end * (1 + 1e-12)) throw ConfigurationError("sample time outside [0, t_end]");
  Trajectory tr;
  PhaseField f = transform(f0, Repr::XV);
  double t = 0;
  long n = 0;
  for (double target : sample_times) {
    while (target - t > 1e-14 * std::max(1.0, target)) {
      const double remaining = target - t;
      // Avoid a sliver step when the remainder barely exceeds dt.
      const double h = remaining <= cfg.dt * (1 + 1e-9) ? remaining : cfg.dt;
      f = step(f, cfg, h, n++);
      t = h == remaining ? target : t + h;
    }
    tr.times.push_back(target);
    tr.fields.push_back(f);
  }
  return tr;
}

/// Classical RK4 on g(t) = U(-t) f(t), dg/dt = U(-t) Q(U(t) g, U(t) g).
/// No filtering and no splitting error, so this is the semi-discrete flow the
/// Duhamel expansions are built from. Returns fields f(t) in XV at the requested times.
inline Trajectory reference_solve(const PhaseField& f0, const KernelSpec& kernel, double dt,
                                  std::vector<double> sample_times) {
  if (!(dt > 0)) throw ConfigurationError("dt must be positive");
  kernel.validate(f0.grid().d());
  std::sort(sample_times.begin(), sample_times.end());
  auto rhs = [&](const PhaseField& gi, double t) {
    PhaseField f = transform(propagate(gi, t), Repr::XV);
    return propagate(q_direct(f, f, kernel), -t);
  };
  Trajectory tr;
  PhaseField g = transform(f0, Repr::XV);
  double t = 0;
  long n = 0;
  for (double target : sample_times) {
    if (target < 0) throw ConfigurationError("sample times must be nonnegative");
    while (target - t > 1e-14 * std::max(1.0, target)) {
      const double h = std::min(dt, target - t);
      PhaseField k1 = rhs(g, t);
      PhaseField y = k1;
      y *= 0.5 * h;
      y += g;
      PhaseField k2 = rhs(y, t + 0.5 * h);
      y = k2;
      y *= 0.5 * h;
      y += g;
      PhaseField k3 = rhs(y, t + 0.5 * h);
      y = k3;
      y *= h;
      y += g;
      PhaseField k4 = rhs(y, t + h);
      k2 += k3;
      k2 *= 2.0;
      k1 += k2;
      k1 += k4;
      k1 *= h / 6;
      g += k1;
      detail::check_finite(g, n++);
      t = h == target - t ? target : t + h;
    }
    tr.times.push_back(target);
    tr.fields.push_back(transform(propagate(g, t), Repr::XV));
  }
  return tr;
}

// ----------------------------------------------------------- initial data

inline PhaseField perturbed_maxwellian(const SpectralGrid& g, double eps, int mode = 1) {
  const int d = g.d();
  const double c = std::pow(2 * std::numbers::pi, -0.5 * d);
  return sample_xv(g, [&](auto x, auto v) {
    return cplx(c * std::exp(-0.5 * dot(v, v, d)) * (1 + eps * std::cos(mode * x[0])), 0);
  });
}

/// Real band-limited field: Maxwellian background plus seeded modes |k| <= kmax
/// with Gaussian velocity bumps, scaled so the perturbation has the given
/// H^s_x L^{2,r}_v norm.
inline PhaseField random_initial(const SpectralGrid& g, std::uint64_t seed, double amplitude, double s = 1,
                                 double r = 1, int kmax = 1) {
  const int d = g.d();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  struct Mode {
    std::array<int, 3> k{};
    double a = 0, phase = 0;
    Vec c{};
  };
  std::vector<Mode> modes(4);
  for (auto& m : modes) {
    for (int i = 0; i < d; ++i) {
      m.k[i] = static_cast<int>(std::lround(ud(rng) * 2 * kmax));
      m.c[i] = ud(rng);
    }
    m.a = nd(rng);
    m.phase = 2 * std::numbers::pi * ud(rng);
  }
  PhaseField pert = sample_xv(g, [&](auto x, auto v) {
    double acc = 0;
    for (const auto& m : modes) {
      double kx = m.phase, r2 = 0;
      for (int i = 0; i < d; ++i) {
        kx += m.k[i] * x[i];
        r2 += (v[i] - m.c[i]) * (v[i] - m.c[i]);
      }
      acc += m.a * std::cos(kx) * std::exp(-r2);
    }
    return cplx(acc, 0);
  });
  const double n = sobolev_norm(pert, s, r);
  if (n > 0) pert *= amplitude / n;
  PhaseField out = maxwellian(g);
  out += pert;
  return out;
}

// ------------------------------------------------------------- uniqueness

struct GapRow {
  double t = 0;
  double l2 = 0;
  double sobolev = 0;  // H^s_x L^{2,r}_v
};

struct GapTable {
  std::vector<GapRow> rows;
  double sup_l2 = 0, sup_sobolev = 0;
};

/// Gap between two discretizations of the same data, sampled at common times.
/// The configurations must share the grid; they may differ in dt or scheme.
inline GapTable uniqueness_experiment(const PhaseField& f0, const SolverConfig& a, const SolverConfig& b,
                                      const std::vector<double>& times, double s = 1, double r = 1) {
  if (!(a.grid == b.grid)) throw ConfigurationError("uniqueness runs must share the grid");
  auto ta = solve(f0, a, times);
  auto tb = solve(f0, b, times);
  GapTable out;
  for (std::size_t i = 0; i < ta.times.size(); ++i) {
    PhaseField diff = ta.fields[i] - tb.fields[i];
    GapRow row{ta.times[i], l2_norm(diff), sobolev_norm(diff, s, r)};
    out.sup_l2 = std::max(out.sup_l2, row.l2);
    out.sup_sobolev = std::max(out.sup_sobolev, row.sobolev);
    out.rows.push_back(row);
  }
  return out;
}

struct RefinementStudy {
  double gap_coarse = 0;  // sup gap of (dt, dt/2)
  double gap_fine = 0;    // sup gap of (dt/2, dt/4)
  double ratio = 0;
  double order = 0;
};

/// Joint-refinement check: the gap should shrink by 2^order per halving.
inline RefinementStudy refinement_study(const PhaseField& f0, SolverConfig cfg, const std::vector<double>& times) {
  SolverConfig h2 = cfg, h4 = cfg;
  h2.dt = cfg.dt / 2;
  h4.dt = cfg.dt / 4;
  RefinementStudy st;
  st.gap_coarse = uniqueness_experiment(f0, cfg, h2, times).sup_l2;
  st.gap_fine = uniqueness_experiment(f0, h2, h4, times).sup_l2;
  st.ratio = st.gap_fine > 0 ? st.gap_coarse / st.gap_fine : 0;
  st.order = st.ratio > 0 ? std::log2(st.ratio) : 0;
  return st;
}

inline double total_mass(const PhaseField& f) {
  PhaseField h = transform(f, Repr::XV);
  cplx s = 0;
  for (auto z : h.data()) s += z;
  return s.real() * h.cell_measure();
}

/// Flat little-endian complex128 snapshots, row-major in (time, x, v).
inline void write_trajectory_binary(const Trajectory& tr, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open " + path);
  for (const auto& f : tr.fields) {
    PhaseField h = transform(f, Repr::XV);
    out.write(reinterpret_cast<const char*>(h.data().data()),
              static_cast<std::streamsize>(h.data().size() * sizeof(cplx)));
  }
  if (!out) throw ConfigurationError("failed writing " + path);
}

}  // namespace boltzkit
