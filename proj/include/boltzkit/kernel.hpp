#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "boltzkit/error.hpp"
#include "boltzkit/grid.hpp"
#include "boltzkit/quadrature.hpp"

namespace boltzkit {

using Vec = std::array<double, 3>;

enum class Angular { AbsCos, CosSquared };
enum class CollisionRoute { Direct, Bobylev };

/// B(z, omega) = |z|^gamma b(zhat . omega) with b(c) = C|c| or C c^2.
struct KernelSpec {
  double gamma = 0;
  Angular angular = Angular::AbsCos;
  double C = 1;
  /// Nodes on the full sphere for d >= 2 (half of them are used where b is even).
  int n_sphere = 64;
  CollisionRoute route = CollisionRoute::Direct;
  /// Multiplies the Fourier-side operator. The convention used here makes it 1.
  double bobylev_constant = 1;

  void validate(int d) const {
    if (!(gamma <= 0 && gamma >= -d))
      throw UnsupportedRegimeError("gamma must lie in [-d, 0], got " + std::to_string(gamma));
    if (!(C >= 0)) throw ConfigurationError("angular constant C must be nonnegative");
    if (n_sphere < 4) throw ConfigurationError("n_sphere must be at least 4");
  }
};

inline double angular_b(double c, const KernelSpec& s) {
  return s.angular == Angular::AbsCos ? s.C * std::abs(c) : s.C * c * c;
}

/// Closed-form integral of b over S^{d-1}.
inline double angular_integral_exact(const KernelSpec& s, int d) {
  const double pi = std::numbers::pi;
  if (d == 1) return 2 * s.C;
  if (s.angular == Angular::AbsCos) return s.C * (d == 2 ? 4 : 2 * pi);
  return s.C * (d == 2 ? pi : 4 * pi / 3);
}

struct CollisionPair {
  Vec u_star;
  Vec v_star;
};

/// u* = u + (omega.(v-u)) omega, v* = v - (omega.(v-u)) omega.
inline CollisionPair post_collision(const Vec& u, const Vec& v, const Vec& omega, int d) {
  if (std::abs(norm2(omega, d) - 1) > 1e-12) throw GeometryError("collision direction is not a unit vector");
  double p = 0;
  for (int i = 0; i < d; ++i) p += omega[i] * (v[i] - u[i]);
  CollisionPair r{};
  for (int i = 0; i < d; ++i) {
    r.u_star[i] = u[i] + p * omega[i];
    r.v_star[i] = v[i] - p * omega[i];
  }
  return r;
}

/// Mean of |z|^gamma over the cube [-h/2, h/2]^d. The cube splits into 2d
/// pyramids with apex at the origin; along each ray the radial integral is
/// closed-form, leaving a smooth face integral done by Gauss-Legendre.
inline double cell_average_power(double gamma, double h, int d) {
  if (gamma == 0) return 1;
  if (gamma <= -d) return 0;
  const double a = h / 2;
  const double pref = 2 * d * a / (gamma + d);
  double face = 0;
  if (d == 1) {
    face = std::pow(a, gamma);
  } else {
    auto r = gauss_legendre(24, -a, a);
    if (d == 2) {
      for (std::size_t i = 0; i < r.x.size(); ++i) face += r.w[i] * std::pow(a * a + r.x[i] * r.x[i], gamma / 2);
    } else {
      for (std::size_t i = 0; i < r.x.size(); ++i)
        for (std::size_t j = 0; j < r.x.size(); ++j)
          face += r.w[i] * r.w[j] * std::pow(a * a + r.x[i] * r.x[i] + r.x[j] * r.x[j], gamma / 2);
    }
  }
  return pref * face / std::pow(h, d);
}

/// |z|^gamma with the z = 0 value replaced by its cell average (cell side h).
/// At gamma = -d the cell average diverges and the zero cell is excised.
inline double radial_kernel(double r, double gamma, double h, int d, bool* regularised = nullptr) {
  if (gamma == 0) return 1;
  if (r == 0) {
    if (regularised) *regularised = true;
    return cell_average_power(gamma, h, d);
  }
  return std::pow(r, gamma);
}

/// B(u_rel, omega). At u_rel = 0 with gamma < 0 the radial factor is the cell
/// average over a cube of side `cell` and b is replaced by its spherical mean.
inline double eval_kernel(const Vec& u_rel, const Vec& omega, const KernelSpec& s, int d,
                          double cell = 1.0, bool* regularised = nullptr) {
  if (std::abs(norm2(omega, d) - 1) > 1e-12) throw GeometryError("collision direction is not a unit vector");
  const double r = norm2(u_rel, d);
  if (r == 0) {
    const double area = d == 1 ? 2 : (d == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi);
    return radial_kernel(0, s.gamma, cell, d, regularised) * angular_integral_exact(s, d) / area;
  }
  const double c = dot(u_rel, omega, d) / r;
  return radial_kernel(r, s.gamma, cell, d) * angular_b(c, s);
}

// ------------------------------------------------------------ sphere rules

struct SphereRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};

/// Orthonormal completion of a unit vector in R^3.
inline void frame(const Vec& e, Vec& a, Vec& b) {
  Vec t = std::abs(e[0]) < 0.9 ? Vec{1, 0, 0} : Vec{0, 1, 0};
  a = {e[1] * t[2] - e[2] * t[1], e[2] * t[0] - e[0] * t[2], e[0] * t[1] - e[1] * t[0]};
  const double na = norm2(a, 3);
  for (auto& x : a) x /= na;
  b = {e[1] * a[2] - e[2] * a[1], e[2] * a[0] - e[0] * a[2], e[0] * a[1] - e[1] * a[0]};
}

/// Weighted nodes for omega -> b(zhat.omega) on the half sphere {zhat.omega >= 0}.
/// Weights include b and the factor 2 from the omega -> -omega symmetry.
/// The half sphere is exactly where |zhat.omega| is smooth, so Gauss rules
/// converge spectrally.
inline SphereRule omega_rule(const Vec& zhat, const KernelSpec& s, int d) {
  SphereRule r;
  if (d == 1) {
    r.nodes.push_back({zhat[0] >= 0 ? 1.0 : -1.0, 0, 0});
    r.weights.push_back(2 * angular_b(1, s));
    return r;
  }
  if (d == 2) {
    const double alpha = std::atan2(zhat[1], zhat[0]);
    const double pi = std::numbers::pi;
    auto q = gauss_legendre(s.n_sphere / 2, -pi / 2, pi / 2);
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      r.nodes.push_back({std::cos(alpha + q.x[i]), std::sin(alpha + q.x[i]), 0});
      r.weights.push_back(2 * q.w[i] * angular_b(std::cos(q.x[i]), s));
    }
    return r;
  }
  const int nt = std::max(2, static_cast<int>(std::lround(std::sqrt(s.n_sphere / 4.0))));
  const int nphi = std::max(4, s.n_sphere / 2 / nt);
  auto q = gauss_legendre(nt, 0, 1);
  Vec a, b;
  frame(zhat, a, b);
  const double dphi = 2 * std::numbers::pi / nphi;
  for (int i = 0; i < nt; ++i) {
    const double t = q.x[i], st = std::sqrt(1 - t * t);
    for (int j = 0; j < nphi; ++j) {
      const double ph = j * dphi;
      Vec w{};
      for (int c = 0; c < 3; ++c) w[c] = t * zhat[c] + st * (std::cos(ph) * a[c] + std::sin(ph) * b[c]);
      r.nodes.push_back(w);
      r.weights.push_back(2 * q.w[i] * dphi * angular_b(t, s));
    }
  }
  return r;
}

/// Angular weight in the sigma representation, b_sigma(t) with t = zhat.sigma,
/// obtained from b by the change of variables sigma = 2(zhat.omega)omega - zhat.
inline double b_sigma(double t, const KernelSpec& s, int d) {
  const double c = std::sqrt(std::max(0.0, (1 + t) / 2));
  if (d == 1) return t > 0 ? 2 * angular_b(1, s) : 0;
  if (c == 0) return s.angular == Angular::AbsCos && d == 3 ? s.C / 2 : 0;
  return 2 * angular_b(c, s) / (std::pow(2.0, d - 1) * std::pow(c, d - 2));
}

/// Nodes sigma with weights beta(sigma) = b_sigma(-xihat.sigma) on the full sphere.
inline SphereRule sigma_rule(const Vec& xihat, const KernelSpec& s, int d) {
  SphereRule r;
  if (d == 1) {
    r.nodes.push_back({xihat[0] >= 0 ? -1.0 : 1.0, 0, 0});
    r.weights.push_back(b_sigma(1, s, 1));
    return r;
  }
  const double pi = std::numbers::pi;
  if (d == 2) {
    const double alpha = std::atan2(xihat[1], xihat[0]);
    auto q = gauss_legendre(s.n_sphere, 0, 2 * pi);
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      r.nodes.push_back({std::cos(alpha + q.x[i]), std::sin(alpha + q.x[i]), 0});
      r.weights.push_back(q.w[i] * b_sigma(-std::cos(q.x[i]), s, 2));
    }
    return r;
  }
  const int nb = std::max(2, static_cast<int>(std::lround(std::sqrt(s.n_sphere / 2.0))));
  const int nphi = std::max(4, s.n_sphere / nb);
  auto q = gauss_legendre(nb, 0, pi);
  Vec a, b;
  frame(xihat, a, b);
  const double dphi = 2 * pi / nphi;
  for (int i = 0; i < nb; ++i) {
    const double ct = std::cos(q.x[i]), st = std::sin(q.x[i]);
    for (int j = 0; j < nphi; ++j) {
      const double ph = j * dphi;
      Vec w{};
      for (int c = 0; c < 3; ++c) w[c] = ct * xihat[c] + st * (std::cos(ph) * a[c] + std::sin(ph) * b[c]);
      r.nodes.push_back(w);
      r.weights.push_back(q.w[i] * st * dphi * b_sigma(-ct, s, 3));
    }
  }
  return r;
}

/// c_b = integral of b over the sphere, by the same quadrature the operators use.
inline double angular_integral(const KernelSpec& s, int d) {
  auto r = omega_rule(Vec{1, 0, 0}, s, d);
  double t = 0;
  for (double w : r.weights) t += w;
  return t;
}

}  // namespace boltzkit
