#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "boltzkit/error.hpp"

namespace boltzkit {

enum class DomainKind { TorusBox, BoxBox };

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

/// Discretisation of T^d x [-v_max, v_max)^d.
///
/// Every axis uses centered sampling: physical sample j sits at (j - n/2) * step
/// and Fourier index m stands for (m - n/2) * dual_step. For the torus the x step
/// is 2 pi / nx so wavenumbers are integers. For box-cross-box the x-box is
/// [-x_half, x_half) with x_half = v_max.
class SpectralGrid {
 public:
  SpectralGrid() = default;
  SpectralGrid(int d, int nx, int nv, double v_max, DomainKind kind = DomainKind::TorusBox)
      : d_(d), nx_(nx), nv_(nv), v_max_(v_max), kind_(kind) {
    if (d < 1 || d > 3) throw UnsupportedDimensionError("d must be 1, 2 or 3, got " + std::to_string(d));
    if (!is_pow2(nx) || nx < 4) throw ConfigurationError("nx must be a power of two >= 4, got " + std::to_string(nx));
    if (!is_pow2(nv) || nv < 4) throw ConfigurationError("nv must be a power of two >= 4, got " + std::to_string(nv));
    if (!(v_max > 0) || !std::isfinite(v_max)) throw ConfigurationError("v_max must be positive");
  }

  int d() const { return d_; }
  int nx() const { return nx_; }
  int nv() const { return nv_; }
  double v_max() const { return v_max_; }
  DomainKind kind() const { return kind_; }

  double x_period() const { return kind_ == DomainKind::TorusBox ? 2 * std::numbers::pi : 2 * v_max_; }
  double dx() const { return x_period() / nx_; }
  double dk() const { return 2 * std::numbers::pi / x_period(); }
  double dv() const { return 2 * v_max_ / nv_; }
  double dxi() const { return std::numbers::pi / v_max_; }
  double xi_max() const { return dxi() * (nv_ / 2); }

  double x_at(int j) const { return (j - nx_ / 2) * dx(); }
  double k_at(int m) const { return (m - nx_ / 2) * dk(); }
  double v_at(int j) const { return (j - nv_ / 2) * dv(); }
  double xi_at(int m) const { return (m - nv_ / 2) * dxi(); }

  std::size_t x_count() const { return ipow(nx_); }
  std::size_t v_count() const { return ipow(nv_); }
  std::size_t size() const { return x_count() * v_count(); }

  /// Row-major shape: d x-axes then d v-axes.
  std::vector<int> shape() const {
    std::vector<int> s(2 * d_);
    for (int i = 0; i < d_; ++i) {
      s[i] = nx_;
      s[d_ + i] = nv_;
    }
    return s;
  }
  std::vector<int> x_axes() const {
    std::vector<int> a(d_);
    for (int i = 0; i < d_; ++i) a[i] = i;
    return a;
  }
  std::vector<int> v_axes() const {
    std::vector<int> a(d_);
    for (int i = 0; i < d_; ++i) a[i] = d_ + i;
    return a;
  }

  /// Multi-index of a flat velocity index (last axis fastest).
  std::array<int, 3> v_index(std::size_t flat) const { return unflatten(flat, nv_); }
  std::array<int, 3> x_index(std::size_t flat) const { return unflatten(flat, nx_); }

  /// Physical velocity (or dual frequency, via xi_at) of a flat velocity index.
  std::array<double, 3> v_point(std::size_t flat) const {
    auto id = v_index(flat);
    std::array<double, 3> p{};
    for (int i = 0; i < d_; ++i) p[i] = v_at(id[i]);
    return p;
  }
  std::array<double, 3> xi_point(std::size_t flat) const {
    auto id = v_index(flat);
    std::array<double, 3> p{};
    for (int i = 0; i < d_; ++i) p[i] = xi_at(id[i]);
    return p;
  }
  std::array<double, 3> k_point(std::size_t flat) const {
    auto id = x_index(flat);
    std::array<double, 3> p{};
    for (int i = 0; i < d_; ++i) p[i] = k_at(id[i]);
    return p;
  }
  std::array<double, 3> x_point(std::size_t flat) const {
    auto id = x_index(flat);
    std::array<double, 3> p{};
    for (int i = 0; i < d_; ++i) p[i] = x_at(id[i]);
    return p;
  }

  /// True if any axis of the velocity multi-index sits on the unpaired Nyquist slot.
  bool v_on_nyquist(std::size_t flat) const {
    auto id = v_index(flat);
    for (int i = 0; i < d_; ++i)
      if (id[i] == 0) return true;
    return false;
  }

  /// The xi point of a flat index together with its aliases: each coordinate on
  /// the unpaired Nyquist slot -xi_max is also taken at +xi_max.
  std::vector<std::array<double, 3>> xi_aliases(std::size_t flat) const {
    std::vector<std::array<double, 3>> out{xi_point(flat)};
    auto id = v_index(flat);
    for (int i = 0; i < d_; ++i) {
      if (id[i] != 0) continue;
      const std::size_t k = out.size();
      for (std::size_t j = 0; j < k; ++j) {
        auto p = out[j];
        p[i] = -p[i];
        out.push_back(p);
      }
    }
    return out;
  }

  bool operator==(const SpectralGrid&) const = default;

 private:
  std::size_t ipow(int n) const {
    std::size_t r = 1;
    for (int i = 0; i < d_; ++i) r *= static_cast<std::size_t>(n);
    return r;
  }
  std::array<int, 3> unflatten(std::size_t flat, int n) const {
    std::array<int, 3> id{};
    for (int i = d_ - 1; i >= 0; --i) {
      id[i] = static_cast<int>(flat % n);
      flat /= n;
    }
    return id;
  }

  int d_ = 1;
  int nx_ = 4;
  int nv_ = 4;
  double v_max_ = 1;
  DomainKind kind_ = DomainKind::TorusBox;
};

inline SpectralGrid make_grid(int d, int nx, int nv, double v_max,
                              DomainKind kind = DomainKind::TorusBox) {
  return SpectralGrid(d, nx, nv, v_max, kind);
}

inline double dot(const std::array<double, 3>& a, const std::array<double, 3>& b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const std::array<double, 3>& a, int d) { return std::sqrt(dot(a, a, d)); }

}  // namespace boltzkit
