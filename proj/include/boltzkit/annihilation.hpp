#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "boltzkit/collision.hpp"
#include "boltzkit/parallel.hpp"
#include "boltzkit/spectral.hpp"

namespace boltzkit {

namespace detail {

/// Trigonometric interpolant in v of one cell, built from its xi samples:
/// w -> c dxi^d sum_m f~(xi_m) e^{i w.xi_m}, with the Nyquist slot split
/// evenly between +-xi_max.
class VelocityInterpolant {
 public:
  VelocityInterpolant(const SpectralGrid& g, std::span<const cplx> ft)
      : d_(g.d()), n_(g.nv()), grid_(g), ft_(ft.begin(), ft.end()),
        scale_(std::pow(g.dxi(), g.d()) * inv_sqrt_2pi_pow(g.d())) {}

  cplx operator()(const Vec& w, std::vector<cplx>& e) const {
    const int n = n_;
    e.resize(3 * static_cast<std::size_t>(n));
    for (int a = 0; a < d_; ++a) {
      for (int m = 1; m < n; ++m) e[a * n + m] = std::polar(1.0, w[a] * grid_.xi_at(m));
      e[a * n] = std::cos(w[a] * grid_.xi_max());
    }
    cplx acc = 0;
    for (std::size_t m = 0; m < ft_.size(); ++m) {
      auto id = grid_.v_index(m);
      cplx ph = ft_[m];
      for (int a = 0; a < d_; ++a) ph *= e[a * n + id[a]];
      acc += ph;
    }
    return scale_ * acc;
  }

 private:
  int d_, n_;
  SpectralGrid grid_;
  std::vector<cplx> ft_;
  double scale_;
};

}  // namespace detail

struct AnnihilationReport {
  double M = 0, M1 = 0, M2 = 0;
  double ratio = 0;
  bool condition_met = false;  // M >= 10 max(M1, M2)
  bool passed = true;          // ratio below threshold when the condition holds
  double threshold = 1e-12;
  long evaluated_terms = 0;    // (u, omega) pairs with both projected factors nonzero
};

/// ||P_M Q+~(P_M1 f~, P_M2 g~)|| / (||f~|| ||g~||) with xi-projectors acting as
/// multipliers in v. The gain is evaluated in its post-collisional form
///   Q+(v) = sum_u dv^d sum_omega w b K(u-v) (P f)(v*) (P g)(u*),
/// where (P f)(w) = phi_M1(|w|) f(w) is evaluated at the off-grid points v*, so
/// a term vanishes whenever either projected factor's support is missed.
inline AnnihilationReport check_annihilation(const PhaseField& ft, const PhaseField& gt, double M,
                                             double M1, double M2, const KernelSpec& spec,
                                             LpProfile prof = LpProfile::Sharp) {
  const auto& grid = ft.grid();
  const int d = grid.d();
  spec.validate(d);
  for (double L : {M, M1, M2})
    if (DyadicLevel(L).value() > max_level(grid, LpAxis::Xi))
      throw RangeError("annihilation level exceeds the velocity box");
  AnnihilationReport rep{M, M1, M2};
  rep.condition_met = M >= 10 * std::max(M1, M2);
  rep.threshold = prof == LpProfile::Sharp ? 1e-12 : 1e-8;
  PhaseField fx = transform(ft, Repr::XXI), gx = transform(gt, Repr::XXI);
  const double nf = l2_norm(fx), ng = l2_norm(gx);
  if (nf == 0 || ng == 0) return rep;

  const double dv = grid.dv();
  const double wcell = std::pow(dv, d);
  const double k0 = radial_kernel(0, spec.gamma, dv, d);
  const double c_b = angular_integral(spec, d);

  // The surviving (v, u, omega) terms depend only on the velocity geometry, so
  // they are collected once and replayed in every spatial cell.
  struct Term {
    std::size_t out;
    double weight;
    Vec vs, us;
  };
  std::vector<Term> terms;
  std::vector<std::size_t> outputs;
  std::map<std::array<long, 3>, SphereRule> rules;
  for (std::size_t vi = 0; vi < grid.v_count(); ++vi) {
    const auto v = grid.v_point(vi);
    const double pm = phi(norm2(v, d), M, prof);
    if (pm == 0) continue;
    const std::size_t out = outputs.size();
    outputs.push_back(vi);
    for (std::size_t ui = 0; ui < grid.v_count(); ++ui) {
      const auto u = grid.v_point(ui);
      Vec z{};
      std::array<long, 3> key{};
      for (int c = 0; c < d; ++c) {
        z[c] = u[c] - v[c];
        key[c] = std::lround(z[c] / dv);
      }
      const double r = norm2(z, d);
      if (r == 0) {
        const double a = phi(norm2(v, d), M1, prof), b = phi(norm2(u, d), M2, prof);
        if (a != 0 && b != 0) terms.push_back({out, pm * wcell * k0 * c_b * a * b, v, u});
        continue;
      }
      auto it = rules.find(key);
      if (it == rules.end()) {
        Vec zh{};
        for (int c = 0; c < d; ++c) zh[c] = z[c] / r;
        it = rules.emplace(key, omega_rule(zh, spec, d)).first;
      }
      const auto& rule = it->second;
      const double kr = radial_kernel(r, spec.gamma, dv, d);
      for (std::size_t qn = 0; qn < rule.nodes.size(); ++qn) {
        auto pc = post_collision(u, v, rule.nodes[qn], d);
        const double a = phi(norm2(pc.v_star, d), M1, prof);
        if (a == 0) continue;
        const double b = phi(norm2(pc.u_star, d), M2, prof);
        if (b == 0) continue;
        terms.push_back({out, pm * wcell * rule.weights[qn] * kr * a * b, pc.v_star, pc.u_star});
      }
    }
  }

  std::vector<double> cell_sums(grid.x_count(), 0.0);
  parallel_for(grid.x_count(), [&](std::size_t xi) {
    detail::VelocityInterpolant F(grid, fx.cell(xi)), G(grid, gx.cell(xi));
    std::vector<cplx> scratch, q(outputs.size(), 0.0);
    for (const auto& t : terms) q[t.out] += t.weight * F(t.vs, scratch) * G(t.us, scratch);
    double s = 0;
    for (auto c : q) s += std::norm(c);
    cell_sums[xi] = s;
  });
  double sum = 0;
  for (double c : cell_sums) sum += c;
  rep.evaluated_terms = static_cast<long>(terms.size());
  rep.ratio = std::sqrt(sum * std::pow(grid.dx() * dv, d)) / (nf * ng);
  rep.passed = !rep.condition_met || rep.ratio < rep.threshold;
  return rep;
}

}  // namespace boltzkit
