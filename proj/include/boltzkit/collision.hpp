#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "boltzkit/field.hpp"
#include "boltzkit/kernel.hpp"
#include "boltzkit/parallel.hpp"

namespace boltzkit {

enum class CollisionPart { Gain, Loss, Full };

namespace detail {

inline double inv_sqrt_2pi_pow(int d) { return std::pow(2 * std::numbers::pi, -0.5 * d); }

inline std::vector<int> cube_shape(int n, int d) { return std::vector<int>(d, n); }
inline std::vector<int> all_axes(int d) {
  std::vector<int> a(d);
  for (int i = 0; i < d; ++i) a[i] = i;
  return a;
}

/// Evaluates q -> c dv^d sum_j f(v_j) e^{-i v_j.q}, the trigonometric
/// interpolant of one cell's velocity samples, at arbitrary q. Separable sums
/// make this O(n^d) per point with O(d n) exponentials.
class CellInterpolant {
 public:
  CellInterpolant(const SpectralGrid& g, std::span<const cplx> samples)
      : d_(g.d()), n_(g.nv()), dv_(g.dv()), f_(samples.begin(), samples.end()),
        scale_(std::pow(g.dv(), g.d()) * inv_sqrt_2pi_pow(g.d())) {}

  cplx operator()(const Vec& q, std::vector<cplx>& scratch) const {
    const int n = n_;
    scratch.resize(3 * static_cast<std::size_t>(n));
    for (int a = 0; a < d_; ++a) {
      cplx* e = scratch.data() + a * n;
      const cplx step = std::polar(1.0, -dv_ * q[a]);
      e[0] = std::polar(1.0, dv_ * (n / 2) * q[a]);
      for (int j = 1; j < n; ++j) e[j] = e[j - 1] * step;
    }
    const cplx* e0 = scratch.data();
    const cplx* e1 = scratch.data() + n;
    const cplx* e2 = scratch.data() + 2 * n;
    cplx acc = 0;
    if (d_ == 1) {
      for (int j = 0; j < n; ++j) acc += e0[j] * f_[j];
    } else if (d_ == 2) {
      for (int i = 0; i < n; ++i) {
        cplx row = 0;
        const cplx* fr = f_.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row += e1[j] * fr[j];
        acc += e0[i] * row;
      }
    } else {
      for (int i = 0; i < n; ++i) {
        cplx plane = 0;
        for (int j = 0; j < n; ++j) {
          cplx row = 0;
          const cplx* fr = f_.data() + (static_cast<std::size_t>(i) * n + j) * n;
          for (int k = 0; k < n; ++k) row += e2[k] * fr[k];
          plane += e1[j] * row;
        }
        acc += e0[i] * plane;
      }
    }
    return scale_ * acc;
  }

 private:
  int d_, n_;
  double dv_;
  std::vector<cplx> f_;
  double scale_;
};

/// Radial kernel on the zero-padded difference lattice: index j per axis
/// stands for z = dv (j - n), j in [0, 2n).
inline std::vector<double> padded_kernel(const SpectralGrid& g, const KernelSpec& s) {
  const int d = g.d(), n = g.nv(), m = 2 * n;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= m;
  std::vector<double> k(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t r = flat;
    double r2 = 0;
    for (int a = d - 1; a >= 0; --a) {
      const double z = g.dv() * (static_cast<int>(r % m) - n);
      r /= m;
      r2 += z * z;
    }
    k[flat] = radial_kernel(std::sqrt(r2), s.gamma, g.dv(), d);
  }
  return k;
}

/// Sum over u of g(u) K(u - v) dv^d for every v, as an explicit double sum
/// organised by offset z = u - v.
inline std::vector<cplx> loss_weight_direct(const SpectralGrid& g, const std::vector<double>& kpad,
                                            std::span<const cplx> gc) {
  const int d = g.d(), n = g.nv(), m = 2 * n;
  std::array<int, 3> ext{1, 1, 1};
  for (int a = 0; a < d; ++a) ext[3 - d + a] = n;
  const std::size_t s1 = static_cast<std::size_t>(ext[2]), s0 = s1 * static_cast<std::size_t>(ext[1]);
  std::array<int, 3> dlo{0, 0, 0}, dhi{0, 0, 0};
  for (int a = 3 - d; a < 3; ++a) {
    dlo[a] = -(n - 1);
    dhi[a] = n - 1;
  }
  std::vector<cplx> out(g.v_count(), 0.0);
  for (int a0 = dlo[0]; a0 <= dhi[0]; ++a0)
    for (int a1 = dlo[1]; a1 <= dhi[1]; ++a1)
      for (int a2 = dlo[2]; a2 <= dhi[2]; ++a2) {
        std::array<int, 3> del{a0, a1, a2};
        std::size_t kidx = 0;
        for (int a = 3 - d; a < 3; ++a) kidx = kidx * m + static_cast<std::size_t>(del[a] + n);
        const double k = kpad[kidx];
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(a0 * s0 + a1 * s1 + a2);
        for (int i = std::max(0, -a0); i < std::min(ext[0], ext[0] - a0); ++i)
          for (int j = std::max(0, -a1); j < std::min(ext[1], ext[1] - a1); ++j) {
            const std::size_t base = i * s0 + j * s1;
            for (int l = std::max(0, -a2); l < std::min(ext[2], ext[2] - a2); ++l) {
              const std::size_t vi = base + l;
              out[vi] += k * gc[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) + shift)];
            }
          }
      }
  const double w = std::pow(g.dv(), d);
  for (auto& z : out) z *= w;
  return out;
}

}  // namespace detail

/// Precomputed data for the direct (velocity-side) operator on one grid.
///
/// The gain term is evaluated through its pre-collisional weak form:
///   Q+~(xi) = c dv^{2d} sum_z K(z) A_z(xi) P_z(xi),
///   P_z(xi) = sum_v f(v) g(v+z) e^{-i xi.v},
///   A_z(xi) = sum_omega w b(zhat.omega) e^{-i (xi.omega)(omega.z)},
/// which is the change of variables (v, u) -> (v*, u*) applied to the
/// post-collisional integral. Every pair of grid velocities contributes and no
/// off-grid interpolation is needed.
class DirectOperator {
 public:
  DirectOperator(const SpectralGrid& g, const KernelSpec& s) : grid_(g), spec_(s) {
    s.validate(g.d());
    const int d = g.d(), n = g.nv();
    kpad_ = detail::padded_kernel(g, s);
    c_b_ = angular_integral(s, d);
    const int span = 2 * n - 1;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= span;
    offsets_.resize(count);
    for (std::size_t flat = 0; flat < count; ++flat) {
      std::size_t r = flat;
      std::array<int, 3> del{};
      for (int a = d - 1; a >= 0; --a) {
        del[a] = static_cast<int>(r % span) - (n - 1);
        r /= span;
      }
      offsets_[flat] = del;
    }
    cache_tables_ = count * g.v_count() <= (std::size_t{1} << 24);
    if (cache_tables_) {
      tables_.resize(count);
      parallel_for(count, [&](std::size_t i) { tables_[i] = make_table(offsets_[i]); });
    }
  }

  const SpectralGrid& grid() const { return grid_; }
  double c_b() const { return c_b_; }

  /// Gain in xi for one cell (f, g velocity samples). On Nyquist slots the
  /// value is the mean over the +-xi_max aliases, which keeps real data real.
  /// With `same` set (f and g hold identical samples) the offsets z and -z are
  /// paired: P_{-z}(xi) = e^{-i xi.z} P_z(xi) and A_{-z} = conj(A_z).
  std::vector<cplx> gain_xi(std::span<const cplx> f, std::span<const cplx> g, bool same = false) const {
    const int d = grid_.d(), n = grid_.nv();
    const std::size_t nvc = grid_.v_count();
    std::vector<cplx> acc(nvc, 0.0), p(nvc);
    const auto shape = detail::cube_shape(n, d);
    const auto axes = detail::all_axes(d);
    std::vector<cplx> table;
    // Strides for a padded 3-axis loop; unused axes have extent 1.
    std::array<int, 3> ext{1, 1, 1};
    std::array<std::size_t, 3> stride{0, 0, 0};
    for (int a = 0; a < d; ++a) ext[3 - d + a] = n;
    stride[2] = 1;
    stride[1] = static_cast<std::size_t>(ext[2]);
    stride[0] = stride[1] * static_cast<std::size_t>(ext[1]);
    std::vector<cplx> ez(static_cast<std::size_t>(d) * n);
    const std::size_t half = offsets_.size() / 2;  // index of z = 0
    for (std::size_t oi = same ? half : 0; oi < offsets_.size(); ++oi) {
      std::array<int, 3> del{0, 0, 0};
      for (int a = 0; a < d; ++a) del[3 - d + a] = offsets_[oi][a];
      std::array<int, 3> lo{}, hi{};
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, -del[a]);
        hi[a] = std::min(ext[a], ext[a] - del[a]);
      }
      std::fill(p.begin(), p.end(), cplx(0));
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(del[0] * stride[0] + del[1] * stride[1] + del[2]);
      bool any = false;
      for (int i = lo[0]; i < hi[0]; ++i)
        for (int j = lo[1]; j < hi[1]; ++j) {
          const std::size_t base = i * stride[0] + j * stride[1];
          for (int k = lo[2]; k < hi[2]; ++k) {
            const std::size_t vi = base + k;
            const cplx val = f[vi] * g[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) + shift)];
            p[vi] = val;
            any = any || val != cplx(0);
          }
        }
      if (!any) continue;
      centered_dft_inplace(p, shape, axes, -1);
      const std::vector<cplx>* tab;
      if (cache_tables_) {
        tab = &tables_[oi];
      } else {
        table = make_table(offsets_[oi]);
        tab = &table;
      }
      const double k = kernel_at(offsets_[oi]);
      if (same && oi != half) {
        for (int a = 0; a < d; ++a)
          for (int m = 0; m < n; ++m)
            ez[a * n + m] = std::polar(1.0, -grid_.xi_at(m) * offsets_[oi][a] * grid_.dv());
        std::size_t m = 0;
        for (int i = 0; i < ext[0]; ++i)
          for (int j = 0; j < ext[1]; ++j)
            for (int l = 0; l < ext[2]; ++l, ++m) {
              cplx ph = ez[(d - 1) * n + l];
              if (d >= 2) ph *= ez[(d - 2) * n + j];
              if (d == 3) ph *= ez[i];
              const cplx t = (*tab)[m];
              acc[m] += k * (t + ph * std::conj(t)) * p[m];
            }
        continue;
      }
      for (std::size_t m = 0; m < nvc; ++m) acc[m] += k * (*tab)[m] * p[m];
    }
    const double scale = detail::inv_sqrt_2pi_pow(d) * std::pow(grid_.dv(), 2 * d);
    for (auto& z : acc) z *= scale;
    return acc;
  }

  /// Loss in v for one cell: c_b f(v) sum_u g(u) K(u-v) dv^d.
  std::vector<cplx> loss_v(std::span<const cplx> f, std::span<const cplx> g) const {
    auto w = detail::loss_weight_direct(grid_, kpad_, g);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= c_b_ * f[i];
    return w;
  }

 private:
  double kernel_at(const std::array<int, 3>& del) const {
    const int n = grid_.nv(), m = 2 * n;
    std::size_t idx = 0;
    for (int c = 0; c < grid_.d(); ++c) idx = idx * m + static_cast<std::size_t>(del[c] + n);
    return kpad_[idx];
  }

  std::vector<cplx> make_table(const std::array<int, 3>& del) const {
    const int d = grid_.d();
    Vec z{}, zhat{1, 0, 0};
    for (int c = 0; c < d; ++c) z[c] = del[c] * grid_.dv();
    const double r = norm2(z, d);
    if (r > 0)
      for (int c = 0; c < d; ++c) zhat[c] = z[c] / r;
    auto rule = omega_rule(zhat, spec_, d);
    const int n = grid_.nv();
    std::vector<cplx> t(grid_.v_count(), 0.0);
    // The phase is separable across axes, and so is the mean over Nyquist
    // aliases: slot 0 of an axis averages e^{-+i xi_max w_a s}, i.e. a cosine.
    std::vector<cplx> e(static_cast<std::size_t>(d) * n);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const auto& w = rule.nodes[q];
      const double sz = dot(w, z, d);
      for (int a = 0; a < d; ++a) {
        for (int m = 1; m < n; ++m) e[a * n + m] = std::polar(1.0, -grid_.xi_at(m) * w[a] * sz);
        e[a * n] = std::cos(grid_.xi_max() * w[a] * sz);
      }
      const double wt = rule.weights[q];
      for (std::size_t m = 0; m < t.size(); ++m) {
        auto id = grid_.v_index(m);
        cplx ph = wt;
        for (int a = 0; a < d; ++a) ph *= e[a * n + id[a]];
        t[m] += ph;
      }
    }
    return t;
  }

  SpectralGrid grid_;
  KernelSpec spec_;
  std::vector<double> kpad_;
  double c_b_ = 0;
  std::vector<std::array<int, 3>> offsets_;
  bool cache_tables_ = false;
  std::vector<std::vector<cplx>> tables_;
};

/// Precomputed data for the Fourier-side operator on one grid.
///
/// With K^(eta) the zero-padded discrete transform of the radial kernel
/// (eta spacing pi/(2 v_max), 2n points per axis), the gain is
///   Q+~(xi) = (2 pi)^{d/2} sum_sigma beta(sigma) sum_eta deta^d K^(eta)
///             f~(xi+ + eta) g~(xi- - eta),   xi+- = (xi +- |xi| sigma)/2,
/// where f~, g~ are the exact trigonometric interpolants. For gamma = 0 the
/// padded transform is a Kronecker delta and only f~(xi+) g~(xi-) remains.
class BobylevOperator {
 public:
  BobylevOperator(const SpectralGrid& g, const KernelSpec& s) : grid_(g), spec_(s) {
    s.validate(g.d());
    const int d = g.d(), n = g.nv();
    c_b_ = angular_integral(s, d);
    constant_kernel_ = s.gamma == 0;
    // K^ table on the padded lattice, pre-multiplied by deta^d.
    auto kpad = detail::padded_kernel(g, s);
    khat_.assign(kpad.begin(), kpad.end());
    centered_dft_inplace(khat_, detail::cube_shape(2 * n, d), detail::all_axes(d), -1);
    const double deta = std::numbers::pi / (2 * g.v_max());
    const double scale = std::pow(2 * std::numbers::pi, -d) * std::pow(g.dv() * deta, d);
    for (auto& z : khat_) z *= scale;
    // sigma rules per output frequency.
    points_.resize(g.v_count());
    for (std::size_t m = 0; m < g.v_count(); ++m) {
      for (const auto& xi : g.xi_aliases(m)) {
        const double r = norm2(xi, d);
        Vec hat{1, 0, 0};
        if (r > 0) {
          for (int c = 0; c < d; ++c) hat[c] = xi[c] / r;
        } else {
          ++zero_frequency_events_;
        }
        points_[m].push_back({xi, sigma_rule(hat, s, d)});
      }
    }
  }

  const SpectralGrid& grid() const { return grid_; }
  double c_b() const { return c_b_; }
  /// Number of output frequencies where xihat is undefined (xi = 0). There the
  /// sigma weights integrate to c_b for any direction, so any fixed axis is used.
  int zero_frequency_events() const { return zero_frequency_events_; }

  /// Gain in xi for one cell given velocity samples of f and g.
  std::vector<cplx> gain_xi(std::span<const cplx> fv, std::span<const cplx> gv) const {
    const int d = grid_.d();
    const std::size_t nvc = grid_.v_count();
    std::vector<cplx> out(nvc, 0.0);
    const double pref = std::pow(2 * std::numbers::pi, 0.5 * d) * spec_.bobylev_constant;
    if (constant_kernel_) {
      detail::CellInterpolant F(grid_, fv), G(grid_, gv);
      std::vector<cplx> scratch;
      for (std::size_t m = 0; m < nvc; ++m) {
        cplx s = 0;
        for (const auto& [xi, rule] : points_[m]) {
          const double r = norm2(xi, d);
          for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            Vec p{}, mi{};
            for (int c = 0; c < d; ++c) {
              p[c] = 0.5 * (xi[c] + r * rule.nodes[q][c]);
              mi[c] = 0.5 * (xi[c] - r * rule.nodes[q][c]);
            }
            s += rule.weights[q] * F(p, scratch) * G(mi, scratch);
          }
        }
        out[m] = pref * s / static_cast<double>(points_[m].size());
      }
      return out;
    }
    const int n = grid_.nv(), mpad = 2 * n;
    const auto shape = detail::cube_shape(mpad, d);
    const auto axes = detail::all_axes(d);
    std::size_t npad = 1;
    for (int i = 0; i < d; ++i) npad *= mpad;
    std::vector<cplx> a(npad), b(npad);
    const double cnorm = detail::inv_sqrt_2pi_pow(d) * std::pow(grid_.dv(), d);
    // Padded positions of the original samples.
    std::vector<std::size_t> slot(nvc);
    for (std::size_t vi = 0; vi < nvc; ++vi) {
      auto id = grid_.v_index(vi);
      std::size_t p = 0;
      for (int c = 0; c < d; ++c) p = p * mpad + static_cast<std::size_t>(id[c] + n / 2);
      slot[vi] = p;
    }
    for (std::size_t m = 0; m < nvc; ++m) {
      cplx s = 0;
      for (const auto& [xi, rule] : points_[m]) {
      const double r = norm2(xi, d);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        Vec p{}, mi{};
        for (int c = 0; c < d; ++c) {
          p[c] = 0.5 * (xi[c] + r * rule.nodes[q][c]);
          mi[c] = 0.5 * (xi[c] - r * rule.nodes[q][c]);
        }
        std::fill(a.begin(), a.end(), cplx(0));
        std::fill(b.begin(), b.end(), cplx(0));
        for (std::size_t vi = 0; vi < nvc; ++vi) {
          const auto v = grid_.v_point(vi);
          a[slot[vi]] = fv[vi] * std::polar(1.0, -dot(v, p, d));
          b[slot[vi]] = gv[vi] * std::polar(1.0, -dot(v, mi, d));
        }
        centered_dft_inplace(a, shape, axes, -1);
        centered_dft_inplace(b, shape, axes, +1);
        cplx t = 0;
        for (std::size_t e = 0; e < npad; ++e) t += khat_[e] * a[e] * b[e];
        s += rule.weights[q] * t * cnorm * cnorm;
      }
      }
      out[m] = pref * s / static_cast<double>(points_[m].size());
    }
    return out;
  }

  /// Loss in xi for one cell: c_b (2pi)^{d/2} sum_eta deta^d K^(eta) f~(xi+eta) g~(-eta),
  /// evaluated as a padded FFT convolution and returned on the xi grid.
  std::vector<cplx> loss_xi(std::span<const cplx> fv, std::span<const cplx> gv) const {
    const int d = grid_.d(), n = grid_.nv(), mpad = 2 * n;
    const std::size_t nvc = grid_.v_count();
    const auto shape = detail::cube_shape(mpad, d);
    const auto axes = detail::all_axes(d);
    std::size_t npad = khat_.size();
    std::vector<cplx> gp(npad, 0.0);
    std::vector<std::size_t> slot(nvc);
    for (std::size_t vi = 0; vi < nvc; ++vi) {
      auto id = grid_.v_index(vi);
      std::size_t p = 0;
      for (int c = 0; c < d; ++c) p = p * mpad + static_cast<std::size_t>(id[c] + n / 2);
      slot[vi] = p;
      gp[p] = gv[vi];
    }
    // G(eta) = sum_u g(u) e^{+i u.eta}; weight by deta^d K^(eta); back to v with e^{-i v.eta}.
    centered_dft_inplace(gp, shape, axes, +1);
    for (std::size_t e = 0; e < npad; ++e) gp[e] *= khat_[e];
    centered_dft_inplace(gp, shape, axes, -1);
    // gp now holds sum_u g(u) K(u-v) at the padded v positions.
    const double back = std::pow(grid_.dv(), d);
    std::vector<cplx> w(nvc);
    for (std::size_t vi = 0; vi < nvc; ++vi) w[vi] = c_b_ * fv[vi] * gp[slot[vi]] * back;
    std::vector<cplx> out(w);
    centered_dft_inplace(out, detail::cube_shape(n, d), axes, -1);
    const double cs = detail::inv_sqrt_2pi_pow(d) * std::pow(grid_.dv(), d);
    for (auto& z : out) z *= cs;
    return out;
  }

 private:
  SpectralGrid grid_;
  KernelSpec spec_;
  double c_b_ = 0;
  bool constant_kernel_ = false;
  std::vector<cplx> khat_;
  struct OutputPoint {
    Vec xi;
    SphereRule rule;
  };
  std::vector<std::vector<OutputPoint>> points_;
  int zero_frequency_events_ = 0;
};

namespace detail {

template <class Op>
std::shared_ptr<const Op> cached_operator(const SpectralGrid& g, const KernelSpec& s) {
  using Key = std::tuple<int, int, int, double, int, double, int, double, int>;
  static std::mutex mtx;
  static std::map<Key, std::shared_ptr<const Op>> cache;
  Key key{g.d(), g.nx(), g.nv(), g.v_max(), static_cast<int>(g.kind()), s.gamma,
          static_cast<int>(s.angular), s.C, s.n_sphere};
  {
    std::lock_guard lock(mtx);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto op = std::make_shared<const Op>(g, s);
  std::lock_guard lock(mtx);
  if (cache.size() > 16) cache.clear();
  return cache.emplace(key, op).first->second;
}

inline void check_pair(const PhaseField& f, const PhaseField& g, Repr want, const char* who) {
  if (!(f.grid() == g.grid())) throw ConfigurationError(std::string(who) + ": fields live on different grids");
  if (f.repr() != want || g.repr() != want)
    throw ConfigurationError(std::string(who) + ": expected " + repr_name(want) + " inputs");
}

}  // namespace detail

/// Velocity-side collision operator, XV in, XV out.
inline PhaseField q_direct(const PhaseField& f, const PhaseField& g, const KernelSpec& spec,
                           CollisionPart part = CollisionPart::Full) {
  detail::check_pair(f, g, Repr::XV, "q_direct");
  const auto& grid = f.grid();
  auto op = detail::cached_operator<DirectOperator>(grid, spec);
  const bool same = &f == &g || std::equal(f.data().begin(), f.data().end(), g.data().begin());
  PhaseField gain(grid, Repr::XXI), loss(grid, Repr::XV);
  parallel_for(grid.x_count(), [&](std::size_t xi) {
    if (part != CollisionPart::Loss) {
      auto q = op->gain_xi(f.cell(xi), g.cell(xi), same);
      std::copy(q.begin(), q.end(), gain.cell(xi).begin());
    }
    if (part != CollisionPart::Gain) {
      auto q = op->loss_v(f.cell(xi), g.cell(xi));
      std::copy(q.begin(), q.end(), loss.cell(xi).begin());
    }
  });
  if (part == CollisionPart::Loss) return loss;
  PhaseField out = transform(gain, Repr::XV);
  if (part == CollisionPart::Full) out -= loss;
  return out;
}

/// Fourier-side collision operator, XXI in, XXI out.
inline PhaseField q_bobylev(const PhaseField& ft, const PhaseField& gt, const KernelSpec& spec,
                            CollisionPart part = CollisionPart::Full) {
  detail::check_pair(ft, gt, Repr::XXI, "q_bobylev");
  const auto& grid = ft.grid();
  auto op = detail::cached_operator<BobylevOperator>(grid, spec);
  PhaseField fv = transform(ft, Repr::XV), gv = transform(gt, Repr::XV);
  PhaseField out(grid, Repr::XXI);
  parallel_for(grid.x_count(), [&](std::size_t xi) {
    auto o = out.cell(xi);
    if (part != CollisionPart::Loss) {
      auto q = op->gain_xi(fv.cell(xi), gv.cell(xi));
      for (std::size_t m = 0; m < q.size(); ++m) o[m] += q[m];
    }
    if (part != CollisionPart::Gain) {
      auto q = op->loss_xi(fv.cell(xi), gv.cell(xi));
      const double sgn = part == CollisionPart::Loss ? 1.0 : -1.0;
      for (std::size_t m = 0; m < q.size(); ++m) o[m] += sgn * q[m];
    }
  });
  return out;
}

/// Collision operator in any representation, routed per spec. The result is
/// returned in f's representation.
inline PhaseField collide(const PhaseField& f, const PhaseField& g, const KernelSpec& spec,
                          CollisionPart part = CollisionPart::Full) {
  if (spec.route == CollisionRoute::Direct)
    return transform(q_direct(transform(f, Repr::XV), transform(g, Repr::XV), spec, part), f.repr());
  return transform(q_bobylev(transform(f, Repr::XXI), transform(g, Repr::XXI), spec, part), f.repr());
}

/// Ratio <a, b>/<a, a> that maps the Fourier-side operator onto the direct one
/// for a reference Gaussian pair. Equals 1 under this library's convention.
inline double calibrate_bobylev_constant(const SpectralGrid& g, KernelSpec spec) {
  spec.bobylev_constant = 1;
  auto gauss = [&](double cx, double w) {
    return sample_xv(g, [&](auto, auto v) {
      double r2 = 0;
      for (int i = 0; i < g.d(); ++i) r2 += (v[i] - (i == 0 ? cx : 0.0)) * (v[i] - (i == 0 ? cx : 0.0));
      return cplx(std::exp(-r2 / (2 * w * w)), 0);
    });
  };
  auto f = gauss(0.3 * g.v_max() / 4, g.v_max() / 8), h = gauss(-0.2 * g.v_max() / 4, g.v_max() / 10);
  auto a = q_bobylev(transform(f, Repr::XXI), transform(h, Repr::XXI), spec, CollisionPart::Gain);
  auto b = transform(q_direct(f, h, spec, CollisionPart::Gain), Repr::XXI);
  cplx ab = 0;
  double aa = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += std::conj(a[i]) * b[i];
    aa += std::norm(a[i]);
  }
  return ab.real() / aa;
}

// --------------------------------------------------------------- moments

struct MomentDeltas {
  double mass = 0;
  double momentum = 0;
  double energy = 0;
};

/// Max over spatial cells of |int Q|, |int v Q|, |int |v|^2 Q|.
inline MomentDeltas conserved_moments(const PhaseField& qf) {
  PhaseField q = transform(qf, Repr::XV);
  const auto& g = q.grid();
  const int d = g.d();
  const double w = std::pow(g.dv(), d);
  MomentDeltas m;
  for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
    cplx mass = 0, en = 0;
    std::array<cplx, 3> mom{};
    auto c = q.cell(xi);
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) {
      auto v = g.v_point(vi);
      mass += c[vi];
      en += dot(v, v, d) * c[vi];
      for (int i = 0; i < d; ++i) mom[i] += v[i] * c[vi];
    }
    double mn = 0;
    for (int i = 0; i < d; ++i) mn += std::norm(mom[i]);
    m.mass = std::max(m.mass, std::abs(mass) * w);
    m.momentum = std::max(m.momentum, std::sqrt(mn) * w);
    m.energy = std::max(m.energy, std::abs(en) * w);
  }
  return m;
}

/// rho (2 pi T)^{-d/2} exp(-|v - u|^2 / 2T), constant in x.
inline PhaseField maxwellian(const SpectralGrid& g, double rho = 1, double T = 1, Vec u = {0, 0, 0}) {
  const int d = g.d();
  const double norm = rho * std::pow(2 * std::numbers::pi * T, -0.5 * d);
  return sample_xv(g, [&](auto, auto v) {
    double r2 = 0;
    for (int i = 0; i < d; ++i) r2 += (v[i] - u[i]) * (v[i] - u[i]);
    return cplx(norm * std::exp(-r2 / (2 * T)), 0);
  });
}

}  // namespace boltzkit
