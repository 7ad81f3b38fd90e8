#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <array>
#include <string>
#include <vector>

#include "boltzkit/field.hpp"

namespace boltzkit {

// ---------------------------------------------------------------- propagator

/// Free transport U(t): multiplies the KV coefficients by e^{-i t k.v}.
/// Returns the result in the input's representation.
inline PhaseField propagate(const PhaseField& f, double t) {
  if (t == 0) return f;
  PhaseField h = transform(f, Repr::KV);
  const auto& g = h.grid();
  const int d = g.d();
  for (std::size_t ki = 0; ki < g.x_count(); ++ki) {
    auto k = g.k_point(ki);
    auto c = h.cell(ki);
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) {
      const double ph = -t * dot(k, g.v_point(vi), d);
      c[vi] *= cplx(std::cos(ph), std::sin(ph));
    }
  }
  return transform(h, f.repr());
}

// ------------------------------------------------------- Littlewood-Paley

enum class LpAxis { X, Xi };
enum class LpMode { Annulus, Ball };
enum class LpProfile { Smooth, Sharp };

namespace detail {
inline double psi(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }
}  // namespace detail

/// Smooth bump: 1 on |z| <= 1, 0 on |z| >= 2.
inline double chi(double z) {
  const double a = std::abs(z);
  if (a <= 1) return 1;
  if (a >= 2) return 0;
  const double p = detail::psi(2 - a);
  return p / (p + detail::psi(a - 1));
}

inline double chi_profile(double z, LpProfile prof) {
  return prof == LpProfile::Sharp ? (std::abs(z) <= 1 ? 1.0 : 0.0) : chi(z);
}

/// phi_N(z) = chi(z/N) - chi(2z/N), supported on N/2 <= |z| <= 2N.
inline double phi(double z, double N, LpProfile prof = LpProfile::Smooth) {
  return chi_profile(z / N, prof) - chi_profile(2 * z / N, prof);
}

inline double lp_multiplier(double z, double N, LpMode mode, LpProfile prof) {
  return mode == LpMode::Ball ? chi_profile(z / N, prof) : phi(z, N, prof);
}

/// Dyadic scale N = 2^j with j >= 0.
class DyadicLevel {
 public:
  explicit DyadicLevel(double value) : value_(value) {
    const double l = std::log2(value);
    if (!(value >= 1) || std::abs(l - std::round(l)) > 1e-12)
      throw RangeError("dyadic level must be a power of two >= 1, got " + std::to_string(value));
  }
  double value() const { return value_; }

 private:
  double value_;
};

/// Largest admissible level for an axis: the x-Nyquist nx/2 (in k units) for
/// x-projectors, the velocity box half-width for xi-projectors.
inline double max_level(const SpectralGrid& g, LpAxis axis) {
  return axis == LpAxis::X ? g.dk() * (g.nx() / 2) : g.v_max();
}

/// P^x_N / P^x_{<=N} act on |k|; P^xi_N / P^xi_{<=N} act on the Fourier
/// variable of xi, which is v.
inline PhaseField lp_project(const PhaseField& f, LpAxis axis, DyadicLevel level, LpMode mode,
                             LpProfile prof = LpProfile::Smooth) {
  const auto& g = f.grid();
  const double N = level.value();
  if (N > max_level(g, axis))
    throw RangeError("projector level " + std::to_string(N) + " exceeds grid Nyquist");
  const int d = g.d();
  if (axis == LpAxis::X) {
    PhaseField h = transform(f, Repr::KV);
    for (std::size_t ki = 0; ki < g.x_count(); ++ki) {
      const double m = lp_multiplier(norm2(g.k_point(ki), d), N, mode, prof);
      for (auto& z : h.cell(ki)) z *= m;
    }
    return transform(h, f.repr());
  }
  const Repr work = f.repr() == Repr::KV ? Repr::KV : Repr::XV;
  PhaseField h = transform(f, work);
  std::vector<double> mult(g.v_count());
  for (std::size_t vi = 0; vi < g.v_count(); ++vi)
    mult[vi] = lp_multiplier(norm2(g.v_point(vi), d), N, mode, prof);
  for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
    auto c = h.cell(xi);
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) c[vi] *= mult[vi];
  }
  return transform(h, f.repr());
}

// ------------------------------------------------------------------ scaling

/// (delta_a g)(x, xi) = g(x, a xi), realised as exact sampling of the periodic
/// trigonometric interpolant of g at a * xi. For a = 2^m this is a lookup;
/// on the v side it moves the sample at v to a v. Throws if nonzero samples
/// would leave the velocity box.
inline PhaseField scale_xi(const PhaseField& f, double a) {
  if (!(a > 0) || !std::isfinite(a)) throw RangeError("scale factor must be positive");
  if (a == 1) return f;
  const auto& g = f.grid();
  const int d = g.d();
  const int n = g.nv();
  const Repr work = f.repr() == Repr::KV ? Repr::KV : Repr::XV;
  PhaseField src = transform(f, work);
  PhaseField dst(g, work);

  double peak = 0;
  for (auto z : src.data()) peak = std::max(peak, std::abs(z));
  const double tol = 1e-12 * peak;

  const double l = std::log2(a);
  const bool integer_pow2 = a >= 1 && std::abs(l - std::round(l)) < 1e-12;
  if (integer_pow2) {
    const long ia = std::lround(a);
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) {
      auto id = g.v_index(vi);
      std::size_t target = 0;
      bool inside = true;
      for (int i = 0; i < d; ++i) {
        const long t = ia * (id[i] - n / 2) + n / 2;
        if (t < 0 || t >= n) inside = false;
        target = target * n + static_cast<std::size_t>(std::max<long>(t, 0));
      }
      for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
        const cplx z = src.at(xi, vi);
        if (!inside) {
          if (std::abs(z) > tol) throw RangeError("scale_xi: support leaves the velocity box");
          continue;
        }
        dst.at(xi, target) = z;
      }
    }
    return transform(dst, f.repr());
  }

  // General a: evaluate the interpolant at a * xi by separable direct sums.
  for (std::size_t vi = 0; vi < g.v_count(); ++vi) {
    const double r = norm2(g.v_point(vi), d);
    if (a * r >= g.v_max() + 1e-12)
      for (std::size_t xi = 0; xi < g.x_count(); ++xi)
        if (std::abs(src.at(xi, vi)) > tol) throw RangeError("scale_xi: support leaves the velocity box");
  }
  PhaseField out(g, Repr::XXI);
  // phase[i][m][j] = e^{-i v_j (a xi_m)}; per axis identical.
  std::vector<cplx> ph(static_cast<std::size_t>(n) * n);
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j) {
      const double arg = -g.v_at(j) * a * g.xi_at(m);
      ph[static_cast<std::size_t>(m) * n + j] = cplx(std::cos(arg), std::sin(arg));
    }
  const double c = std::pow(g.dv() / std::sqrt(2 * std::numbers::pi), d);
  for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
    auto s = src.cell(xi);
    auto o = out.cell(xi);
    for (std::size_t mi = 0; mi < g.v_count(); ++mi) {
      auto mid = g.v_index(mi);
      cplx acc = 0;
      for (std::size_t vj = 0; vj < g.v_count(); ++vj) {
        auto jid = g.v_index(vj);
        cplx w = s[vj];
        for (int i = 0; i < d; ++i) w *= ph[static_cast<std::size_t>(mid[i]) * n + jid[i]];
        acc += w;
      }
      o[mi] = c * acc;
    }
  }
  return transform(out, f.repr());
}

// -------------------------------------------------------------------- norms

enum class NormKind { LpSpacetime, SobolevHsHr, WeightedL2r };

struct NormSpec {
  NormKind kind = NormKind::SobolevHsHr;
  double p = 2;
  double s = 0;
  double r = 0;
  double T = 1;
  int time_samples = 33;

  void validate() const {
    if (!(p >= 1)) throw ConfigurationError("norm exponent p must be >= 1");
    if (time_samples < 2) throw ConfigurationError("time_samples must be >= 2");
    if (!std::isfinite(s) || !std::isfinite(r)) throw ConfigurationError("s and r must be finite");
  }
};

inline double japanese(double z) { return std::sqrt(1 + z * z); }

/// ||<k>^s <v>^r f||_{L^2} evaluated in KV. By Parseval this equals the
/// H^s_x H^r_xi norm of the velocity transform.
inline double sobolev_norm(const PhaseField& f, double s, double r) {
  PhaseField h = transform(f, Repr::KV);
  const auto& g = h.grid();
  const int d = g.d();
  std::vector<double> wv(g.v_count());
  for (std::size_t vi = 0; vi < g.v_count(); ++vi) wv[vi] = std::pow(japanese(norm2(g.v_point(vi), d)), 2 * r);
  double acc = 0;
  for (std::size_t ki = 0; ki < g.x_count(); ++ki) {
    const double wk = std::pow(japanese(norm2(g.k_point(ki), d)), 2 * s);
    auto c = h.cell(ki);
    double row = 0;
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) row += wv[vi] * std::norm(c[vi]);
    acc += wk * row;
  }
  return std::sqrt(acc * h.cell_measure());
}

/// Sum over the grid of |f|^p times the cell measure of the XXI representation.
inline double lp_xxi_power(const PhaseField& f, double p) {
  PhaseField h = transform(f, Repr::XXI);
  double acc = 0;
  for (auto z : h.data()) acc += std::pow(std::abs(z), p);
  return acc * h.cell_measure();
}

/// Uniform sample times 0, T/(n-1), ..., T.
inline std::vector<double> uniform_times(double T, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = T * i / (n - 1);
  return t;
}

/// Composite trapezoid of samples y over uniform times spanning [0, T].
inline double trapezoid(const std::vector<double>& y, double T) {
  if (y.size() < 2) return 0;
  const double h = T / static_cast<double>(y.size() - 1);
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

/// ||U(t) f0||_{L^p([0,T] x T^d x R^d)} in the (t, x, xi) variables.
/// Each time slice is one transform over all axes. Running the x-axes forward
/// instead of backward reflects x -> -x, which leaves the norm unchanged.
inline double spacetime_lp_norm(const PhaseField& f0, double p, double T, int time_samples) {
  NormSpec{NormKind::LpSpacetime, p, 0, 0, T, time_samples}.validate();
  const auto ts = uniform_times(T, time_samples);
  const PhaseField kv = transform(f0, Repr::KV);
  const auto& g = kv.grid();
  const int d = g.d(), nx = g.nx(), nv = g.nv();
  const std::size_t nvc = g.v_count();
  std::vector<std::array<int, 3>> vid(nvc);
  for (std::size_t vi = 0; vi < nvc; ++vi) vid[vi] = g.v_index(vi);
  std::vector<int> axes(2 * d);
  for (int a = 0; a < 2 * d; ++a) axes[a] = a;
  const auto shape = g.shape();
  const double scale = std::pow((g.dk() * g.dv()) / (2 * std::numbers::pi), d);
  const double measure = std::pow(g.dx() * g.dxi(), d);
  std::vector<cplx> buf(g.size()), e(static_cast<std::size_t>(nx) * nv);
  std::vector<double> y(ts.size());
  for (std::size_t it = 0; it < ts.size(); ++it) {
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nv; ++j)
        e[i * nv + j] = std::polar((i + j) % 2 ? -1.0 : 1.0, -ts[it] * g.k_at(i) * g.v_at(j));
    for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
      const auto kid = g.x_index(xi);
      const auto src = kv.cell(xi);
      cplx* dst = buf.data() + xi * nvc;
      for (std::size_t vi = 0; vi < nvc; ++vi) {
        cplx z = src[vi];
        for (int a = 0; a < d; ++a) z *= e[kid[a] * nv + vid[vi][a]];
        dst[vi] = z;
      }
    }
    dft_inplace(buf, shape, axes, FFTW_FORWARD);
    double acc = 0;
    if (p == 4) {
      for (auto z : buf) acc += std::norm(z) * std::norm(z);
    } else if (p == 2) {
      for (auto z : buf) acc += std::norm(z);
    } else {
      for (auto z : buf) acc += std::pow(std::norm(z), p / 2);
    }
    y[it] = acc * std::pow(scale, p) * measure;
  }
  return std::pow(trapezoid(y, T), 1.0 / p);
}

/// Dispatch on NormSpec. LpSpacetime treats f as initial data of a free trajectory.
inline double norm(const PhaseField& f, const NormSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NormKind::LpSpacetime: return spacetime_lp_norm(f, spec.p, spec.T, spec.time_samples);
    case NormKind::SobolevHsHr: return sobolev_norm(f, spec.s, spec.r);
    case NormKind::WeightedL2r: return sobolev_norm(f, 0, spec.r);
  }
  return 0;
}

}  // namespace boltzkit
