#include <gtest/gtest.h>

#include <set>

#include "boltzkit/hierarchy.hpp"
#include "oracles.hpp"

using namespace boltzkit;

TEST(CollapseMaps, CountsAndOrder) {
  for (int k = 1; k <= 8; ++k) {
    auto maps = enumerate_collapse_maps(k);
    EXPECT_EQ(static_cast<long>(maps.size()), factorial(k));
    EXPECT_TRUE(std::is_sorted(maps.begin(), maps.end()));
    EXPECT_EQ(std::set<CollapseMap>(maps.begin(), maps.end()).size(), maps.size());
    for (const auto& m : maps) EXPECT_TRUE(m.valid());
  }
  auto two = enumerate_collapse_maps(2);
  EXPECT_EQ(two[0].str(), "(1,1)");
  EXPECT_EQ(two[1].str(), "(1,2)");
  EXPECT_EQ(enumerate_collapse_maps(1)[0].str(), "(1)");
  EXPECT_THROW(enumerate_collapse_maps(0), RangeError);
  EXPECT_THROW(enumerate_collapse_maps(9), RangeError);
}

TEST(DuhamelTree, ReferenceTree) {
  EXPECT_EQ(build_duhamel_tree({{1, 1, 2, 3}}).str(), "D1(D2(D3(F1,D5(F3,F5)),D4(F2,F4)))");
  EXPECT_EQ(build_duhamel_tree({{1}}).str(), "D1(D2(F1,F2))");
  auto t = build_duhamel_tree({{1, 2}});
  EXPECT_TRUE(t.left(2).is_leaf);
  EXPECT_EQ(t.left(2).index, 1);
  EXPECT_FALSE(t.right(2).is_leaf);
  EXPECT_EQ(t.right(2).index, 3);
  EXPECT_THROW(build_duhamel_tree({{1, 3}}), ConfigurationError);
}

TEST(DuhamelTree, EveryNodeOnceAndLeafCount) {
  for (int k = 1; k <= 6; ++k)
    for (const auto& mu : enumerate_collapse_maps(k)) {
      auto s = build_duhamel_tree(mu).str();
      for (int j = 1; j <= k + 1; ++j) {
        const std::string tag = "D" + std::to_string(j) + "(";
        EXPECT_EQ(s.find(tag), s.rfind(tag)) << s;
        EXPECT_NE(s.find(tag), std::string::npos) << s;
        const std::string leaf = "F" + std::to_string(j);
        EXPECT_EQ(s.find(leaf + ","), s.rfind(leaf + ",")) << s;
      }
      EXPECT_EQ(std::count(s.begin(), s.end(), 'F'), k + 1) << s;
    }
}

TEST(BoardGame, ClassesAreCatalan) {
  for (int k = 1; k <= 8; ++k) {
    auto cls = km_classes(k);
    EXPECT_EQ(static_cast<long>(cls.size()), catalan(k)) << k;
    EXPECT_LE(static_cast<double>(cls.size()), std::pow(4.0, k));
    long total = 0;
    for (const auto& c : cls) {
      EXPECT_TRUE(c.representative.canonical());
      total += static_cast<long>(c.members.size());
      if (k <= 5) {
        for (const auto& m : c.members) EXPECT_EQ(echelon_reduce(m).canonical, c.representative);
      }
    }
    EXPECT_EQ(total, factorial(k));
  }
}

TEST(BoardGame, ReductionExamples) {
  auto r = echelon_reduce({{1, 1, 2, 3}});
  EXPECT_EQ(r.canonical.str(), "(1,1,2,3)");
  EXPECT_EQ(r.perm, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  auto s = echelon_reduce({{1, 2, 1}});
  EXPECT_EQ(s.canonical.str(), "(1,1,2)");
  EXPECT_EQ(s.perm, (std::vector<int>{0, 1, 2, 4, 3}));
  EXPECT_EQ(echelon_reduce({{1}}).canonical.str(), "(1)");
}

namespace {

SpectralGrid tiny1() { return make_grid(1, 8, 8, 4); }
SpectralGrid tiny2() { return make_grid(2, 4, 8, 4); }

std::vector<PhaseField> leaves_for(const SpectralGrid& g, int k, std::uint64_t seed) {
  std::vector<PhaseField> out;
  for (int i = 0; i <= k; ++i) {
    out.push_back(oracle::random_smooth(g, seed + i, 1, 1.0, false, 0.2));
    out.back() *= 1 / l2_norm(out.back());
  }
  return out;
}

std::vector<double> times_for(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 0.5);
  std::vector<double> t(k + 1);
  for (auto& x : t) x = u(rng);
  std::sort(t.rbegin(), t.rend());
  return t;
}

}  // namespace

TEST(Expansion, TreeMatchesOperatorString) {
  auto g = tiny1();
  KernelSpec spec;
  spec.gamma = -0.5;
  for (int k = 1; k <= 4; ++k) {
    auto leaves = leaves_for(g, k, 10 * k);
    auto t = times_for(k, k);
    for (const auto& mu : enumerate_collapse_maps(k)) {
      auto a = expand_tree(build_duhamel_tree(mu), leaves, t, spec);
      auto b = eval_J_direct(mu, leaves, t, spec);
      EXPECT_LT(max_abs_diff(a, b), 1e-10) << mu.str();
      EXPECT_GT(l2_norm(b), 0) << mu.str();
    }
  }
}

TEST(Expansion, SingleCollisionAtZeroTimes) {
  auto g = tiny2();
  auto f = oracle::random_smooth(g, 3, 1, 1.0, false, 0.2);
  auto a = expand_tree(build_duhamel_tree({{1}}), same_leaves(f, 1), {0, 0}, KernelSpec{});
  auto b = transform(q_direct(f, f, KernelSpec{}), Repr::XXI);
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
  PhaseField z(g, Repr::XV);
  EXPECT_EQ(l2_norm(expand_tree(build_duhamel_tree({{1, 1}}), same_leaves(z, 2), {0.3, 0.2, 0.1}, KernelSpec{})), 0);
}

TEST(Expansion, MatchesFullTensorOracle) {
  auto g = tiny1();
  KernelSpec spec;
  auto leaves = leaves_for(g, 2, 77);
  const std::vector<double> t{0.45, 0.3, 0.1};
  for (const auto& mu : enumerate_collapse_maps(2)) {
    auto T = oracle::product(leaves);
    T = oracle::collide_particles(T, g, mu(3) - 1, 2, spec);
    oracle::propagate_particle(T, g, 0, t[1] - t[2]);
    oracle::propagate_particle(T, g, 1, t[1] - t[2]);
    T = oracle::collide_particles(T, g, 0, 1, spec);
    oracle::propagate_particle(T, g, 0, t[0] - t[1]);
    PhaseField ref(g, Repr::XV, T.a);
    auto got = transform(eval_J_direct(mu, leaves, t, spec), Repr::XV);
    EXPECT_LT(max_abs_diff(got, ref), 1e-8 * (1 + l2_norm(ref))) << mu.str();
  }
}

TEST(Expansion, LinearInEachSlot) {
  auto g = tiny1();
  auto leaves = leaves_for(g, 3, 5);
  auto other = oracle::random_smooth(g, 99, 1, 1.0, false, 0.2);
  auto t = times_for(3, 8);
  const CollapseMap mu{{1, 2, 1}};
  for (int slot : {1, 3}) {
    auto a = leaves, b = leaves, c = leaves;
    b[slot] = other;
    c[slot] = leaves[slot];
    c[slot] *= 2.0;
    c[slot] += other;
    auto ja = eval_J_direct(mu, a, t, KernelSpec{});
    auto jb = eval_J_direct(mu, b, t, KernelSpec{});
    auto jc = eval_J_direct(mu, c, t, KernelSpec{});
    ja *= 2.0;
    ja += jb;
    EXPECT_LT(max_abs_diff(ja, jc), 1e-10 * (1 + l2_norm(jc)));
  }
}

TEST(BoardGame, MembersEqualRepresentativeAtPermutedTimes) {
  // With freely evolved leaves U(t_{k+1}) f0 every member's integrand is the
  // representative's integrand at the permuted times.
  auto g = tiny2();
  auto f0 = oracle::random_smooth(g, 4, 1, 1.0, false, 0.2);
  KernelSpec spec;
  for (int k = 2; k <= 3; ++k) {
    auto t = times_for(k, 30 + k);
    for (const auto& cls : km_classes(k))
      for (std::size_t m = 0; m < cls.members.size(); ++m) {
        auto s = permute_times(t, cls.time_permutations[m]);
        auto a = eval_J_direct(cls.members[m], same_leaves(propagate(f0, t.back()), k), t, spec);
        auto b = eval_J_direct(cls.representative, same_leaves(propagate(f0, s.back()), k), s, spec);
        EXPECT_LT(max_abs_diff(a, b), 1e-12 * (1 + l2_norm(a))) << cls.members[m].str();
      }
  }
}

TEST(TimeDomain, Volumes) {
  const double t1 = 0.8;
  for (int k = 1; k <= 3; ++k) {
    auto r = simplex_rule(k, t1, 4);
    double s = 0;
    for (double w : r.weights) s += w;
    EXPECT_NEAR(s, std::pow(t1, k) / factorial(k), 1e-14);
  }
  auto one = km_classes(1)[0];
  auto d1 = time_domain_sample(one, t1, 2000, 1);
  EXPECT_NEAR(d1.volume, t1, 1e-14);
  for (const auto& c : km_classes(3)) {
    auto ds = time_domain_sample(c, t1, 20000, 7);
    EXPECT_NEAR(ds.volume, ds.exact_volume, 3 * ds.sigma + 1e-12) << c.representative.str();
    if (c.members.size() == 1) {
      EXPECT_NEAR(ds.exact_volume, std::pow(t1, 3) / 6, 1e-14);
    }
  }
  EXPECT_THROW(time_domain_sample(one, t1, 10, 1), ConfigurationError);
}

TEST(Bounds, IterateBound) {
  const double C = 2, C0 = 0.5, T = std::pow(0.5 / (4 * C * C0), 2);
  for (int k = 0; k <= 5; ++k) EXPECT_NEAR(iterate_bound(k, T, C, C0), std::pow(2.0, -k), 1e-15);
  EXPECT_EQ(iterate_bound(3, 0, C, C0), 0);
  EXPECT_EQ(iterate_bound(0, 0, C, C0), 1);
}

TEST(BoardGame, IntegralIdentityWithinMonteCarloError) {
  auto g = tiny2();
  auto f0 = oracle::random_smooth(g, 8, 1, 1.0, false, 0.2);
  KernelSpec spec;
  auto ic = boardgame_identity(f0, 2, 0.4, 40, 1000, 3, spec);
  EXPECT_TRUE(ic.within_3sigma()) << ic.lhs_re << " " << ic.rhs_re << " " << ic.sigma_re;
  EXPECT_GT(ic.sigma_re, 0);
  // depth one has a single class equal to the whole simplex
  auto one = boardgame_identity(f0, 1, 0.4, 40, 1000, 3, spec);
  EXPECT_TRUE(one.within_3sigma());
  EXPECT_THROW(boardgame_identity(f0, 2, 0.4, 1, 1000, 3, spec), ConfigurationError);
}

TEST(Bounds, ConstantsAndLeafTimes) {
  auto g = tiny2();
  auto f = oracle::random_smooth(g, 9, 1, 1.0, false, 0.2);
  KernelSpec spec;
  const double C = measure_bilinear_constant({f}, 0.1, spec);
  EXPECT_GT(C, 0);
  spec.C = 0;
  EXPECT_EQ(measure_bilinear_constant({f}, 0.1, spec), 0);
  auto lt = contraction_leaf_times(2, {0.1, 0.2}, 2);
  EXPECT_TRUE(std::is_sorted(lt.begin(), lt.end()));
  EXPECT_EQ(std::adjacent_find(lt.begin(), lt.end()), lt.end());
  EXPECT_NE(std::find(lt.begin(), lt.end(), 0.2), lt.end());
  for (double t : lt) EXPECT_TRUE(t >= 0 && t <= 0.2);
}
