#pragma once
// Independent reference computations used by the test suite. Nothing here calls
// the library's transforms; the point is to check them against plain sums.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "boltzkit/field.hpp"

namespace oracle {

using boltzkit::cplx;
using boltzkit::PhaseField;
using boltzkit::Repr;
using boltzkit::SpectralGrid;

/// Band-limited random XV field: a few explicit Fourier modes in x times
/// Gaussian bumps in v that are well inside the velocity box.
inline PhaseField random_smooth(const SpectralGrid& g, std::uint64_t seed, int kmax = 2,
                                double width = 0.8, bool real = false, double center_frac = 0.25) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-1, 1);
  const int d = g.d();
  struct Mode {
    std::array<int, 3> k;
    cplx a;
    std::array<double, 3> c;
  };
  std::vector<Mode> modes;
  for (int m = 0; m < 6; ++m) {
    Mode md{};
    for (int i = 0; i < d; ++i) {
      md.k[i] = static_cast<int>(std::lround(u(rng) * kmax));
      md.c[i] = u(rng) * center_frac * g.v_max();
    }
    md.a = cplx(n01(rng), real ? 0.0 : n01(rng));
    modes.push_back(md);
  }
  return boltzkit::sample_xv(g, [&](auto x, auto v) {
    cplx s = 0;
    for (const auto& md : modes) {
      double kx = 0, r2 = 0;
      for (int i = 0; i < d; ++i) {
        kx += md.k[i] * x[i];
        r2 += (v[i] - md.c[i]) * (v[i] - md.c[i]);
      }
      const cplx e = real ? cplx(std::cos(kx), 0) : std::exp(cplx(0, kx));
      s += md.a * e * std::exp(-r2 / (2 * width * width));
    }
    return s;
  });
}

/// Plain O(N^2) velocity transform with the library's stated convention.
inline std::vector<cplx> naive_v_transform(const PhaseField& f) {
  const auto& g = f.grid();
  const int d = g.d();
  const double c = std::pow(g.dv() / std::sqrt(2 * std::numbers::pi), d);
  std::vector<cplx> out(g.size());
  for (std::size_t xi = 0; xi < g.x_count(); ++xi)
    for (std::size_t m = 0; m < g.v_count(); ++m) {
      auto xiv = g.xi_point(m);
      cplx s = 0;
      for (std::size_t j = 0; j < g.v_count(); ++j) {
        auto v = g.v_point(j);
        s += f.at(xi, j) * std::exp(cplx(0, -boltzkit::dot(v, xiv, d)));
      }
      out[xi * g.v_count() + m] = c * s;
    }
  return out;
}

}  // namespace oracle

namespace oracle {

/// Strong-form gain Q+(f,g)(v) for analytic f, g: cell sums over u on the grid
/// and a uniform angle rule with many nodes (d = 2, b = |cos| only). k0 is the
/// radial weight of the u = v cell.
template <class F, class G>
double strong_gain_2d(const SpectralGrid& grid, F&& f, G&& g, double gamma, double k0,
                      std::array<double, 3> v, int n_angle = 2048) {
  const double dv = grid.dv();
  double acc = 0;
  for (std::size_t ui = 0; ui < grid.v_count(); ++ui) {
    auto u = grid.v_point(ui);
    const double zx = u[0] - v[0], zy = u[1] - v[1];
    const double r = std::sqrt(zx * zx + zy * zy);
    if (r == 0) {
      acc += k0 * 4 * f(v) * g(v);  // v* = v, u* = u; c_b = 4 for b = |cos| in d = 2
      continue;
    }
    const double kr = std::pow(r, gamma);
    double s = 0;
    for (int q = 0; q < n_angle; ++q) {
      const double th = 2 * std::numbers::pi * (q + 0.5) / n_angle;
      const double wx = std::cos(th), wy = std::sin(th);
      const double p = wx * (v[0] - u[0]) + wy * (v[1] - u[1]);
      const double b = std::abs(p) / r;
      const std::array<double, 3> vs{v[0] - p * wx, v[1] - p * wy, 0}, us{u[0] + p * wx, u[1] + p * wy, 0};
      s += b * f(vs) * g(us);
    }
    acc += kr * s * (2 * std::numbers::pi / n_angle);
  }
  return acc * dv * dv;
}

}  // namespace oracle

#include "boltzkit/collision.hpp"
#include "boltzkit/spectral.hpp"

namespace oracle {

/// Dense (x, v)^n tensor on a d = 1 grid, one index per particle.
struct Tensor {
  std::size_t m = 0;  // points per particle
  int n = 0;          // particles
  std::vector<cplx> a;
  cplx& at(const std::vector<std::size_t>& idx) {
    std::size_t f = 0;
    for (auto i : idx) f = f * m + i;
    return a[f];
  }
};

inline Tensor product(const std::vector<PhaseField>& fs) {
  Tensor t{fs[0].grid().size(), static_cast<int>(fs.size()), {}};
  t.a.assign(static_cast<std::size_t>(std::pow(t.m, t.n)), cplx(1));
  for (std::size_t f = 0; f < t.a.size(); ++f) {
    std::size_t rem = f;
    for (int p = t.n - 1; p >= 0; --p) {
      t.a[f] *= fs[p].data()[rem % t.m];
      rem /= t.m;
    }
  }
  return t;
}

inline void for_each_other(const Tensor& t, int skip_a, int skip_b,
                           const std::function<void(std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> idx(t.n, 0);
  std::vector<int> free;
  for (int p = 0; p < t.n; ++p)
    if (p != skip_a && p != skip_b) free.push_back(p);
  std::size_t count = 1;
  for (std::size_t i = 0; i < free.size(); ++i) count *= t.m;
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t rem = c;
    for (int p : free) {
      idx[p] = rem % t.m;
      rem /= t.m;
    }
    fn(idx);
  }
}

/// U(t) on one particle of the tensor.
inline void propagate_particle(Tensor& t, const SpectralGrid& g, int p, double time) {
  for_each_other(t, p, -1, [&](std::vector<std::size_t>& idx) {
    PhaseField f(g, Repr::XV);
    for (std::size_t i = 0; i < t.m; ++i) {
      idx[p] = i;
      f.data()[i] = t.at(idx);
    }
    f = boltzkit::propagate(f, time);
    for (std::size_t i = 0; i < t.m; ++i) {
      idx[p] = i;
      t.at(idx) = f.data()[i];
    }
  });
}

/// Q_{a,b}: particle b collides into particle a at a's position and is removed.
/// The two-particle slice G_x(v, u) is split over the velocity point basis in u.
inline Tensor collide_particles(const Tensor& t, const SpectralGrid& g, int a, int b,
                                const boltzkit::KernelSpec& spec) {
  Tensor out{t.m, t.n - 1, {}};
  out.a.assign(static_cast<std::size_t>(std::pow(out.m, out.n)), cplx(0));
  const std::size_t nv = g.v_count();
  for_each_other(t, a, b, [&](std::vector<std::size_t>& idx) {
    PhaseField acc(g, Repr::XV);
    for (std::size_t us = 0; us < nv; ++us) {
      PhaseField A(g, Repr::XV), B(g, Repr::XV);
      for (std::size_t x = 0; x < g.x_count(); ++x) {
        B.at(x, us) = 1;
        for (std::size_t v = 0; v < nv; ++v) {
          idx[a] = x * nv + v;
          idx[b] = x * nv + us;
          A.at(x, v) = const_cast<Tensor&>(t).at(idx);
        }
      }
      acc += boltzkit::q_direct(A, B, spec);
    }
    std::vector<std::size_t> o;
    for (int p = 0; p < t.n; ++p)
      if (p != b) o.push_back(p == a ? 0 : idx[p]);
    const int pa = a < b ? a : a - 1;
    for (std::size_t i = 0; i < t.m; ++i) {
      o[pa] = i;
      out.at(o) = acc.data()[i];
    }
  });
  return out;
}

}  // namespace oracle
