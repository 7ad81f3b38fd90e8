#include <gtest/gtest.h>

#include <numbers>

#include "boltzkit/spectral.hpp"
#include "oracles.hpp"

using namespace boltzkit;
constexpr double pi = std::numbers::pi;

TEST(Grid, StepsAndDualSpacing) {
  auto g = make_grid(2, 16, 16, 8);
  EXPECT_DOUBLE_EQ(g.dv(), 1.0);
  EXPECT_DOUBLE_EQ(g.dxi(), pi / 8);
  auto g1 = make_grid(1, 8, 8, 4);
  EXPECT_DOUBLE_EQ(g1.k_at(0), -4);
  EXPECT_DOUBLE_EQ(g1.k_at(7), 3);
}

TEST(Grid, RejectsBadSizes) {
  EXPECT_THROW(make_grid(2, 15, 16, 8), ConfigurationError);
  EXPECT_THROW(make_grid(4, 16, 16, 8), UnsupportedDimensionError);
  EXPECT_THROW(make_grid(2, 16, 16, -1), ConfigurationError);
}

TEST(Transform, MatchesNaiveSum) {
  auto g = make_grid(2, 4, 8, 4);
  auto f = oracle::random_smooth(g, 3);
  auto ft = transform(f, Repr::XXI);
  auto ref = oracle::naive_v_transform(f);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(std::abs(ft[i] - ref[i]), 0, 1e-12);
}

TEST(Transform, RoundTripAndParseval) {
  auto g = make_grid(2, 8, 16, 6);
  auto f = oracle::random_smooth(g, 11);
  for (Repr r : {Repr::XXI, Repr::KV}) {
    auto h = transform(f, r);
    EXPECT_NEAR(l2_norm(h), l2_norm(f), 1e-12 * l2_norm(f));
    EXPECT_LT(relative_l2_diff(transform(h, Repr::XV), f), 1e-12);
  }
  auto kv = transform(transform(f, Repr::XXI), Repr::KV);
  EXPECT_LT(relative_l2_diff(transform(kv, Repr::XXI), transform(f, Repr::XXI)), 1e-12);
}

TEST(Transform, ExponentialBecomesDelta) {
  auto g = make_grid(1, 4, 16, 4);
  const int m0 = 11;
  const double xi0 = g.xi_at(m0);
  auto f = sample_xv(g, [&](auto, auto v) { return std::exp(cplx(0, v[0] * xi0)); });
  auto ft = transform(f, Repr::XXI);
  for (std::size_t m = 0; m < g.v_count(); ++m) {
    if (static_cast<int>(m) == m0) EXPECT_GT(std::abs(ft.at(0, m)), 1);
    else EXPECT_NEAR(std::abs(ft.at(0, m)), 0, 1e-12);
  }
}

TEST(Propagate, ModeMultipliers) {
  auto g = make_grid(2, 8, 8, 4);
  PhaseField h(g, Repr::KV);
  // k = (1,0), v = (2,0)
  std::size_t ki = (1 + 4) * 8 + 4, vi = (2 + 4) * 8 + 4;
  h.at(ki, vi) = 1;
  EXPECT_NEAR(std::abs(propagate(h, pi).at(ki, vi) - 1.0), 0, 1e-12);
  EXPECT_NEAR(std::abs(propagate(h, pi / 2).at(ki, vi) + 1.0), 0, 1e-12);
}

TEST(Propagate, ExactTransport) {
  auto g = make_grid(2, 16, 16, 8);
  const double t = 0.37;
  auto gv = [](auto v) { return std::exp(-(v[0] * v[0] + v[1] * v[1]) / 2); };
  auto f0 = sample_xv(g, [&](auto x, auto v) { return std::exp(cplx(0, 2 * x[0] - x[1])) * gv(v); });
  auto exact = sample_xv(g, [&](auto x, auto v) {
    return std::exp(cplx(0, 2 * (x[0] - t * v[0]) - (x[1] - t * v[1]))) * gv(v);
  });
  EXPECT_LT(relative_l2_diff(propagate(f0, t), exact), 1e-10);
}

TEST(Propagate, UnitaryAndGroupLaw) {
  auto g = make_grid(2, 16, 16, 8);
  auto f = oracle::random_smooth(g, 5);
  auto a = propagate(propagate(f, 0.3), 0.9);
  EXPECT_LT(relative_l2_diff(a, propagate(f, 1.2)), 1e-12);
  EXPECT_NEAR(l2_norm(propagate(f, 2.1)), l2_norm(f), 1e-12 * l2_norm(f));
  EXPECT_LT(relative_l2_diff(propagate(propagate(f, 0.7), -0.7), f), 1e-12);
}

TEST(LittlewoodPaley, PartitionOfUnity) {
  for (double z : {0.0, 0.7, 1.5, 3.7, 9.1, 30.0}) {
    double s = chi(z);
    for (double N = 2; N <= 1024; N *= 2) s += phi(z, N);
    EXPECT_NEAR(s, 1.0, 1e-12) << z;
  }
}

TEST(LittlewoodPaley, SupportStatements) {
  auto g = make_grid(1, 32, 8, 4);
  PhaseField lo(g, Repr::KV), hi(g, Repr::KV);
  lo.at(16 + 2, 3) = 1;   // k = 2
  hi.at(16 + 12, 3) = 1;  // k = 12
  auto a = lp_project(lo, LpAxis::X, DyadicLevel(2), LpMode::Ball);
  EXPECT_LT(max_abs_diff(a, lo), 1e-15);
  auto b = lp_project(hi, LpAxis::X, DyadicLevel(2), LpMode::Ball);
  EXPECT_LT(l2_norm(b), 1e-15);
  EXPECT_THROW(lp_project(lo, LpAxis::X, DyadicLevel(32), LpMode::Ball), RangeError);
  EXPECT_THROW(DyadicLevel(3), RangeError);
}

TEST(LittlewoodPaley, CommutesWithPropagator) {
  auto g = make_grid(2, 16, 16, 8);
  auto f = oracle::random_smooth(g, 7, 6);
  for (LpAxis ax : {LpAxis::X, LpAxis::Xi}) {
    auto a = propagate(lp_project(f, ax, DyadicLevel(2), LpMode::Annulus), 0.8);
    auto b = lp_project(propagate(f, 0.8), ax, DyadicLevel(2), LpMode::Annulus);
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
  }
}

TEST(Scaling, Identity) {
  auto g = make_grid(1, 8, 16, 8);
  auto f = oracle::random_smooth(g, 1);
  EXPECT_LT(max_abs_diff(scale_xi(f, 1), f), 1e-15);
}

TEST(Scaling, ProjectorAndPropagatorIdentities) {
  auto g = make_grid(2, 8, 16, 8);
  for (int s = 0; s < 5; ++s) {
    auto f = lp_project(oracle::random_smooth(g, 100 + s, 2, 0.5), LpAxis::Xi, DyadicLevel(2),
                        LpMode::Ball, LpProfile::Sharp);
    auto lhs = scale_xi(lp_project(f, LpAxis::Xi, DyadicLevel(1), LpMode::Ball), 2);
    auto rhs = lp_project(scale_xi(f, 2), LpAxis::Xi, DyadicLevel(2), LpMode::Ball);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-10);
    auto u1 = scale_xi(propagate(f, 1.0), 2);
    auto u2 = propagate(scale_xi(f, 2), 0.5);
    EXPECT_LT(max_abs_diff(u1, u2), 1e-10);
  }
}

TEST(Scaling, SupportEscapeThrows) {
  auto g = make_grid(1, 4, 16, 8);
  auto f = sample_xv(g, [](auto, auto v) { return std::exp(-v[0] * v[0] / 8); });
  EXPECT_THROW(scale_xi(f, 4), RangeError);
}

TEST(Norms, SingleModeSobolev) {
  auto g = make_grid(2, 8, 8, 4);
  PhaseField h(g, Repr::KV);
  h.at((3 + 4) * 8 + (1 + 4), 36) = 1 / std::sqrt(h.cell_measure());  // k=(3,1), unit mass
  EXPECT_NEAR(sobolev_norm(h, 1, 0), std::sqrt(11.0), 1e-12);
  EXPECT_EQ(sobolev_norm(PhaseField(g, Repr::XV), 1, 1), 0);
}

TEST(Norms, WeightedMatchesXiSide) {
  auto g = make_grid(1, 4, 32, 8);
  auto f = sample_xv(g, [](auto, auto v) { return std::exp(-v[0] * v[0] / 2); });
  // xi-side H^1: ||<d_xi> f~||^2 = ||f~||^2 + ||d_xi f~||^2, computed by finite spectral derivative.
  auto ft = transform(f, Repr::XXI);
  auto vf = sample_xv(g, [](auto, auto v) { return v[0] * std::exp(-v[0] * v[0] / 2); });
  auto dft = transform(vf, Repr::XXI);  // d_xi f~ = -i F[v f]
  double a = l2_norm(ft), b = l2_norm(dft);
  EXPECT_NEAR(sobolev_norm(f, 0, 1), std::sqrt(a * a + b * b), 1e-8);
  EXPECT_THROW(norm(f, NormSpec{NormKind::SobolevHsHr, 0.5}), ConfigurationError);
}

TEST(Norms, SpacetimeLpOfStaticMode) {
  auto g = make_grid(2, 8, 16, 8);
  auto f = sample_xv(g, [](auto, auto v) { return std::exp(-(v[0] * v[0] + v[1] * v[1])); });
  const double T = 0.7;
  const double st = std::pow(lp_xxi_power(f, 4), 0.25) * std::pow(T, 0.25);
  EXPECT_NEAR(spacetime_lp_norm(f, 4, T, 33), st, 1e-12 * st);
}

TEST(Norms, SpacetimeLpMatchesSliceBySlice) {
  auto g = make_grid(2, 8, 16, 4);
  auto f = sample_xv(g, [](auto x, auto v) {
    return std::exp(cplx(0, 2 * x[0] - x[1])) * std::exp(-(v[0] * v[0] + 2 * v[1] * v[1]) / 2) +
           0.5 * std::cos(x[1]) * std::exp(-((v[0] - 1) * (v[0] - 1) + v[1] * v[1]));
  });
  const double T = 0.9;
  for (double p : {2.0, 3.0, 4.0}) {
    auto ts = uniform_times(T, 9);
    std::vector<double> y;
    for (double t : ts) y.push_back(lp_xxi_power(propagate(f, t), p));
    const double ref = std::pow(trapezoid(y, T), 1 / p);
    EXPECT_NEAR(spacetime_lp_norm(f, p, T, 9), ref, 1e-12 * ref) << p;
  }
}
