#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "boltzkit/collision.hpp"
#include "boltzkit/estimates.hpp"
#include "boltzkit/quadrature.hpp"
#include "boltzkit/spectral.hpp"

namespace boltzkit {

// ------------------------------------------------------------ collapse maps

/// mu(j) for j = 2..k+1, stored at values[j - 2].
struct CollapseMap {
  std::vector<int> values;

  int k() const { return static_cast<int>(values.size()); }
  int operator()(int j) const { return values.at(j - 2); }
  bool valid() const {
    if (values.empty() || values[0] != 1) return false;
    for (int j = 2; j <= k() + 1; ++j)
      if ((*this)(j) < 1 || (*this)(j) >= j) return false;
    return true;
  }
  bool canonical() const { return std::is_sorted(values.begin(), values.end()); }
  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
    return s + ")";
  }
  friend bool operator==(const CollapseMap&, const CollapseMap&) = default;
  friend auto operator<=>(const CollapseMap&, const CollapseMap&) = default;
};

inline constexpr int max_enumeration_depth = 8;

inline void check_depth(int k) {
  if (k < 1 || k > max_enumeration_depth) throw RangeError("depth k must be in [1, 8]");
}

/// All k! maps in lexicographic order.
inline std::vector<CollapseMap> enumerate_collapse_maps(int k) {
  check_depth(k);
  std::vector<CollapseMap> out;
  std::vector<int> v(k, 1);
  while (true) {
    out.push_back({v});
    int i = k - 1;
    // position i holds mu(i + 2), bounded by i + 1
    while (i >= 0 && v[i] == i + 1) v[i--] = 1;
    if (i < 0) break;
    ++v[i];
  }
  return out;
}

inline long factorial(int k) { return k <= 1 ? 1 : k * factorial(k - 1); }

inline long catalan(int k) {
  long c = 1;
  for (int i = 0; i < k; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

// ------------------------------------------------------------ Duhamel tree

struct TreeChild {
  bool is_leaf = false;
  int index = 0;  // D-node index or F-leaf slot
};

struct DuhamelTree {
  CollapseMap mu;
  // children[j] for D-nodes j = 2..k+1; entries 0 and 1 unused
  std::vector<std::pair<TreeChild, TreeChild>> children;

  int k() const { return mu.k(); }
  const TreeChild& left(int j) const { return children.at(j).first; }
  const TreeChild& right(int j) const { return children.at(j).second; }

  /// Nested form, e.g. D1(D2(D3(F1,D5(F3,F5)),D4(F2,F4))).
  std::string str() const {
    std::function<std::string(const TreeChild&)> rec = [&](const TreeChild& c) -> std::string {
      if (c.is_leaf) return "F" + std::to_string(c.index);
      return "D" + std::to_string(c.index) + "(" + rec(left(c.index)) + "," + rec(right(c.index)) + ")";
    };
    return "D1(" + rec({false, 2}) + ")";
  }
};

/// Left child of D_j: the next node colliding into the same particle as j,
/// else F_{mu(j)}. Right child: the first node colliding into particle j, else F_j.
inline DuhamelTree build_duhamel_tree(const CollapseMap& mu) {
  if (!mu.valid()) throw ConfigurationError("invalid collapsing map " + mu.str());
  const int k = mu.k();
  DuhamelTree t{mu, std::vector<std::pair<TreeChild, TreeChild>>(k + 2)};
  for (int j = 2; j <= k + 1; ++j) {
    TreeChild l{true, mu(j)}, r{true, j};
    for (int i = j + 1; i <= k + 1; ++i)
      if (mu(i) == mu(j)) {
        l = {false, i};
        break;
      }
    for (int i = j + 1; i <= k + 1; ++i)
      if (mu(i) == j) {
        r = {false, i};
        break;
      }
    t.children[j] = {l, r};
  }
  return t;
}

// ------------------------------------------------------- Duhamel evaluation

namespace detail {

inline void check_node(const PhaseField& f, int node) {
  for (auto z : f.data())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z) > 1e150)
      throw NumericalRangeError(node, "field left the representable range");
}

inline PhaseField q_pair(const PhaseField& a, const PhaseField& b, const KernelSpec& spec) {
  return q_direct(transform(a, Repr::XV), transform(b, Repr::XV), spec);
}

inline void check_inputs(const CollapseMap& mu, const std::vector<PhaseField>& leaves,
                         const std::vector<double>& times) {
  if (!mu.valid()) throw ConfigurationError("invalid collapsing map " + mu.str());
  const std::size_t n = static_cast<std::size_t>(mu.k()) + 1;
  if (leaves.size() != n) throw ConfigurationError("expected one leaf field per particle slot");
  if (times.size() != n) throw ConfigurationError("expected times t1..t_{k+1}");
  for (double t : times)
    if (!std::isfinite(t)) throw ConfigurationError("non-finite time");
  for (const auto& f : leaves)
    if (!(f.grid() == leaves[0].grid())) throw ConfigurationError("leaf fields live on different grids");
}

}  // namespace detail

/// D^(1) from the tree, leaves[i - 1] in slot i, times[j - 1] = t_j:
///   F_i = U(-t_{k+1}) f_i,  D^(j) = U(-t_j) Q(U(t_j) C_left, U(t_j) C_right),  D^(1) = U(t_1) D^(2).
/// Output in XXI.
inline PhaseField expand_tree(const DuhamelTree& tree, const std::vector<PhaseField>& leaves,
                              const std::vector<double>& times, const KernelSpec& spec) {
  detail::check_inputs(tree.mu, leaves, times);
  const int k = tree.k();
  auto t = [&](int j) { return times[j - 1]; };
  std::vector<PhaseField> D(k + 2, PhaseField(leaves[0].grid(), Repr::XV));
  auto value = [&](const TreeChild& c) -> PhaseField {
    return c.is_leaf ? propagate(transform(leaves[c.index - 1], Repr::XV), -t(k + 1)) : D[c.index];
  };
  for (int j = k + 1; j >= 2; --j) {
    PhaseField a = propagate(value(tree.left(j)), t(j));
    PhaseField b = propagate(value(tree.right(j)), t(j));
    D[j] = propagate(detail::q_pair(a, b, spec), -t(j));
    detail::check_node(D[j], j);
  }
  PhaseField out = transform(propagate(D[2], t(1)), Repr::XXI);
  detail::check_node(out, 1);
  return out;
}

/// The operator string U_{1,2} Q_{mu(2),2} U_{2,3} ... U_{k,k+1} Q_{mu(k+1),k+1}
/// applied to a product state, one field per slot. Output in XXI.
inline PhaseField eval_J_direct(const CollapseMap& mu, const std::vector<PhaseField>& leaves,
                                const std::vector<double>& times, const KernelSpec& spec) {
  detail::check_inputs(mu, leaves, times);
  const int k = mu.k();
  std::vector<PhaseField> slot;
  for (const auto& f : leaves) slot.push_back(transform(f, Repr::XV));
  for (int j = k + 1; j >= 2; --j) {
    slot[mu(j) - 1] = detail::q_pair(slot[mu(j) - 1], slot[j - 1], spec);
    slot.pop_back();
    detail::check_node(slot[mu(j) - 1], j);
    const double dt = times[j - 2] - times[j - 1];
    for (auto& f : slot) f = propagate(f, dt);
  }
  return transform(slot[0], Repr::XXI);
}

inline std::vector<PhaseField> same_leaves(const PhaseField& f, int k) {
  return std::vector<PhaseField>(static_cast<std::size_t>(k) + 1, f);
}

// --------------------------------------------------------- board game

/// Result of echelon reduction: J_mu(t) = J_canonical(s) with s_i = t_{perm[i]}
/// (1-based positions; perm[0] unused, perm[1] = 1).
struct Reduction {
  CollapseMap canonical;
  std::vector<int> perm;
};

/// Adjacent exchange at j, allowed when mu(j) > mu(j+1): the two collisions act on
/// disjoint particle pairs, so they commute once particles j and j+1 swap labels.
inline CollapseMap exchange(const CollapseMap& mu, int j) {
  CollapseMap out = mu;
  auto& v = out.values;
  std::swap(v[j - 2], v[j - 1]);
  for (int l = j + 2; l <= mu.k() + 1; ++l) {
    if (mu(l) == j) v[l - 2] = j + 1;
    else if (mu(l) == j + 1) v[l - 2] = j;
  }
  return out;
}

inline Reduction echelon_reduce(const CollapseMap& mu) {
  if (!mu.valid()) throw ConfigurationError("invalid collapsing map " + mu.str());
  Reduction r{mu, std::vector<int>(mu.k() + 2)};
  std::iota(r.perm.begin(), r.perm.end(), 0);
  for (int guard = 0; !r.canonical.canonical(); ++guard) {
    if (guard > 100000) throw RangeError("echelon reduction did not terminate");
    int j = 2;
    while (r.canonical(j) <= r.canonical(j + 1)) ++j;
    r.canonical = exchange(r.canonical, j);
    std::swap(r.perm[j], r.perm[j + 1]);
  }
  return r;
}

struct EchelonClass {
  CollapseMap representative;
  std::vector<CollapseMap> members;
  std::vector<std::vector<int>> time_permutations;
};

/// Partition of all k! maps keyed by canonical form; Catalan(k) classes.
inline std::vector<EchelonClass> km_classes(int k) {
  std::map<CollapseMap, EchelonClass> byrep;
  for (const auto& mu : enumerate_collapse_maps(k)) {
    auto r = echelon_reduce(mu);
    auto& c = byrep[r.canonical];
    c.representative = r.canonical;
    c.members.push_back(mu);
    c.time_permutations.push_back(r.perm);
  }
  std::vector<EchelonClass> out;
  for (auto& [key, c] : byrep) out.push_back(std::move(c));
  return out;
}

/// Times t1..t_{k+1} with s_i = t_{perm[i]}.
inline std::vector<double> permute_times(const std::vector<double>& t, const std::vector<int>& perm) {
  std::vector<double> s(t.size());
  for (std::size_t i = 1; i <= t.size(); ++i) s[i - 1] = t[perm[i] - 1];
  return s;
}

inline bool in_simplex(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1] || t[i] < 0) return false;
  return true;
}

struct DomainSample {
  std::vector<std::vector<double>> points;  // t1..t_{k+1}
  std::vector<double> weights;              // member images containing the point
  double volume = 0, sigma = 0;             // MC estimate of |T(mu)| counted with multiplicity
  double exact_volume = 0;                  // members * t1^k / k!
  bool overlap = false;
};

/// Monte Carlo realisation of T(mu) as the union of the member simplices' images.
inline DomainSample time_domain_sample(const EchelonClass& cls, double t1, int n_points, std::uint64_t seed) {
  if (n_points < 1000) throw ConfigurationError("time-domain sampling needs at least 1000 points");
  if (!(t1 > 0)) throw ConfigurationError("t1 must be positive");
  const int k = cls.representative.k();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0, t1);
  DomainSample ds;
  double sum = 0, sum2 = 0;
  for (int n = 0; n < n_points; ++n) {
    std::vector<double> s(k + 1);
    s[0] = t1;
    for (int i = 1; i <= k; ++i) s[i] = ud(rng);
    double w = 0;
    for (const auto& p : cls.time_permutations) {
      // s = sigma(t) with s_i = t_{p[i]}, so t_{p[i]} = s_i
      std::vector<double> t(k + 1);
      for (int i = 1; i <= k + 1; ++i) t[p[i] - 1] = s[i - 1];
      if (in_simplex(t)) w += 1;
    }
    if (w > 1) ds.overlap = true;
    ds.points.push_back(std::move(s));
    ds.weights.push_back(w);
    sum += w;
    sum2 += w * w;
  }
  const double cube = std::pow(t1, k), mean = sum / n_points;
  ds.volume = cube * mean;
  ds.sigma = cube * std::sqrt(std::max(0.0, sum2 / n_points - mean * mean) / n_points);
  ds.exact_volume = static_cast<double>(cls.members.size()) * cube / static_cast<double>(factorial(k));
  return ds;
}

struct IdentityCheck {
  int k = 0;
  double lhs_re = 0, lhs_im = 0, rhs_re = 0, rhs_im = 0;
  double sigma_re = 0, sigma_im = 0;  // combined standard error of lhs - rhs
  long evaluations = 0;
  bool within_3sigma() const {
    return std::abs(lhs_re - rhs_re) <= 3 * sigma_re + 1e-14 && std::abs(lhs_im - rhs_im) <= 3 * sigma_im + 1e-14;
  }
};

/// Monte Carlo comparison of
///   sum_mu int_{simplex} J_mu   and   sum_classes int_{T(mu)} J_rep
/// with freely evolved leaves U(t_{k+1}) f0, tested against a seeded field phi.
/// The two sides use independent samples.
inline IdentityCheck boardgame_identity(const PhaseField& f0, int k, double t1, int n_simplex, int n_domain,
                                        std::uint64_t seed, const KernelSpec& spec) {
  check_depth(k);
  if (n_simplex < 2) throw ConfigurationError("simplex sampling needs at least two points");
  const auto& g = f0.grid();
  std::mt19937_64 prng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> nd;
  std::vector<cplx> phi(g.size());
  for (auto& z : phi) z = {nd(prng), nd(prng)};
  auto functional = [&](const PhaseField& F) {
    cplx acc = 0;
    for (std::size_t i = 0; i < F.size(); ++i) acc += std::conj(phi[i]) * F[i];
    return acc * F.cell_measure();
  };
  auto J = [&](const CollapseMap& mu, const std::vector<double>& t) {
    return functional(eval_J_direct(mu, same_leaves(propagate(f0, t.back()), k), t, spec));
  };
  IdentityCheck out;
  out.k = k;
  auto add_stats = [](double sum, double sum2, int n, double scale, double& mean, double& var) {
    const double m = sum / n;
    mean = scale * m;
    var = scale * scale * std::max(0.0, sum2 / n - m * m) / n;
  };

  // all maps, uniform points on the ordered simplex
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0, t1);
  const auto maps = enumerate_collapse_maps(k);
  double sr = 0, sr2 = 0, si = 0, si2 = 0;
  for (int n = 0; n < n_simplex; ++n) {
    std::vector<double> t(k + 1);
    t[0] = t1;
    for (int i = 1; i <= k; ++i) t[i] = ud(rng);
    std::sort(t.begin() + 1, t.end(), std::greater<>());
    cplx v = 0;
    for (const auto& mu : maps) v += J(mu, t);
    out.evaluations += static_cast<long>(maps.size());
    sr += v.real(), sr2 += v.real() * v.real(), si += v.imag(), si2 += v.imag() * v.imag();
  }
  const double simplex_volume = std::pow(t1, k) / static_cast<double>(factorial(k));
  double var_lr = 0, var_li = 0;
  add_stats(sr, sr2, n_simplex, simplex_volume, out.lhs_re, var_lr);
  add_stats(si, si2, n_simplex, simplex_volume, out.lhs_im, var_li);

  // classes, weighted by how many member images cover each point of the cube
  double var_rr = 0, var_ri = 0;
  const auto classes = km_classes(k);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto ds = time_domain_sample(classes[c], t1, n_domain, seed + 1 + c);
    double cr = 0, cr2 = 0, ci = 0, ci2 = 0;
    for (std::size_t q = 0; q < ds.points.size(); ++q) {
      if (ds.weights[q] == 0) continue;
      const cplx v = ds.weights[q] * J(classes[c].representative, ds.points[q]);
      ++out.evaluations;
      cr += v.real(), cr2 += v.real() * v.real(), ci += v.imag(), ci2 += v.imag() * v.imag();
    }
    double m = 0, var = 0;
    add_stats(cr, cr2, n_domain, std::pow(t1, k), m, var);
    out.rhs_re += m, var_rr += var;
    add_stats(ci, ci2, n_domain, std::pow(t1, k), m, var);
    out.rhs_im += m, var_ri += var;
  }
  out.sigma_re = std::sqrt(var_lr + var_rr);
  out.sigma_im = std::sqrt(var_li + var_ri);
  return out;
}

/// Gauss-Legendre rule on {t1 >= t2 >= ... >= t_{k+1} >= 0} through the collapsed
/// coordinates t_{j+1} = t_j u_j.
struct SimplexRule {
  std::vector<std::vector<double>> points;  // t1..t_{k+1}
  std::vector<double> weights;
};

inline SimplexRule simplex_rule(int k, double t1, int n) {
  const auto g = gauss_legendre(n, 0, 1);
  SimplexRule r;
  std::vector<int> idx(k, 0);
  while (true) {
    std::vector<double> t(k + 1);
    t[0] = t1;
    double w = 1;
    for (int i = 0; i < k; ++i) {
      w *= t[i] * g.w[idx[i]];
      t[i + 1] = t[i] * g.x[idx[i]];
    }
    r.points.push_back(std::move(t));
    r.weights.push_back(w);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  return r;
}

// ------------------------------------------------- expansions and bounds

/// Field of the solution at a given time.
using StateAt = std::function<PhaseField(double)>;

/// Depth-k Duhamel expansion of f(t1) - U(t1) f(0):
///   sum_{j<k} sum_mu int_{S_j} J_mu(U(t_{j+1}) f0, ...) + sum_mu int_{S_k} J_mu(f(t_{k+1}), ...),
/// with n Gauss-Legendre nodes per simplex dimension. Output in XXI.
inline PhaseField duhamel_expansion(const PhaseField& f0, const StateAt& state, int k, double t1, int n,
                                    const KernelSpec& spec) {
  check_depth(k);
  PhaseField acc(f0.grid(), Repr::XXI);
  for (int j = 1; j <= k; ++j) {
    const auto rule = simplex_rule(j, t1, n);
    const auto maps = enumerate_collapse_maps(j);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& t = rule.points[q];
      const double tl = t.back();
      PhaseField leaf = j < k ? propagate(f0, tl) : state(tl);
      const auto leaves = same_leaves(leaf, j);
      for (const auto& mu : maps) {
        PhaseField term = eval_J_direct(mu, leaves, t, spec);
        term *= rule.weights[q];
        acc += term;
      }
    }
  }
  return acc;
}

/// Every leaf time a depth-k expansion will request, for presampling a trajectory.
inline std::vector<double> expansion_leaf_times(int k, double t1, int n) {
  std::vector<double> out;
  for (const auto& t : simplex_rule(k, t1, n).points) out.push_back(t.back());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// (4 C C0 T^{1/2})^k.
inline double iterate_bound(int k, double T, double C, double C0) {
  if (k < 0 || T < 0 || C < 0 || C0 < 0) throw ConfigurationError("iterate bound inputs must be nonnegative");
  if (k == 0) return 1;
  return std::pow(4 * C * C0 * std::sqrt(T), k);
}

/// Empirical bilinear constant: max over pairs from `fields` of
///   || int_0^T U(-t) Q(U(t) f, U(t) g) dt || / (T^{1/2} ||f|| ||g||).
inline double measure_bilinear_constant(const std::vector<PhaseField>& fields, double T, const KernelSpec& spec,
                                        int nodes = 4) {
  if (fields.empty()) throw ConfigurationError("no fields to measure the bilinear constant on");
  if (!(T > 0)) throw ConfigurationError("T must be positive");
  const auto gl = gauss_legendre(nodes, 0, T);
  double C = 0;
  for (const auto& a : fields)
    for (const auto& b : fields) {
      const double na = l2_norm(a), nb = l2_norm(b);
      if (na == 0 || nb == 0) continue;
      PhaseField I(a.grid(), Repr::XV);
      for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double t = gl.x[i];
        PhaseField q = propagate(
            q_direct(transform(propagate(a, t), Repr::XV), transform(propagate(b, t), Repr::XV), spec), -t);
        q *= gl.w[i];
        I += q;
      }
      C = std::max(C, l2_norm(I) / (std::sqrt(T) * na * nb));
    }
  return C;
}

/// Every leaf time contraction_demo will request.
inline std::vector<double> contraction_leaf_times(int k_max, const std::vector<double>& t1_samples, int n = 3) {
  std::vector<double> out(t1_samples);
  for (int k = 1; k <= k_max; ++k)
    for (const auto& cls : km_classes(k))
      for (const auto& perm : cls.time_permutations)
        for (double t1 : t1_samples)
          for (const auto& pt : simplex_rule(k, t1, n).points) out.push_back(permute_times(pt, perm).back());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct ContractionRow {
  int k = 0;
  double norm = 0;   // sup_t1 sum_classes ||I_mu||_{L^2}
  double ratio = 0;  // norm_k / norm_{k-1}
  double bound = 0;  // iterate_bound
};

struct ContractionTable {
  std::vector<ContractionRow> rows;
  double C = 0, C0 = 0, T = 0, factor = 0;  // factor = 4 C C0 T^{1/2}
  bool small_T = true;                       // factor < 1
};

/// Depth-k norms of the difference measure delta_{f_a} - delta_{f_b}:
///   sum over canonical classes of || int_{T(mu)} J_mu(f_a^{(k+1)} - f_b^{(k+1)}) ||,
/// where int_{T(mu)} runs over the images of the simplex under the class's time
/// permutations. Row k = 0 is sup ||f_a - f_b||.
inline ContractionTable contraction_demo(const StateAt& fa, const StateAt& fb, int k_max, double T,
                                         const std::vector<double>& t1_samples, const KernelSpec& spec,
                                         double C, double C0, int n = 3) {
  if (k_max < 1 || k_max > 4) throw RangeError("contraction depth must be in [1, 4]");
  ContractionTable tab;
  tab.C = C, tab.C0 = C0, tab.T = T;
  tab.factor = 4 * C * C0 * std::sqrt(T);
  tab.small_T = tab.factor < 1;
  double prev = 0;
  for (int k = 0; k <= k_max; ++k) {
    double sup = 0;
    for (double t1 : t1_samples) {
      if (k == 0) {
        sup = std::max(sup, l2_norm(fa(t1) - fb(t1)));
        continue;
      }
      const auto rule = simplex_rule(k, t1, n);
      double total = 0;
      for (const auto& cls : km_classes(k)) {
        PhaseField I(fa(t1).grid(), Repr::XXI);
        for (const auto& perm : cls.time_permutations)
          for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto s = permute_times(rule.points[q], perm);
            const double tl = s.back();
            PhaseField ja = eval_J_direct(cls.representative, same_leaves(fa(tl), k), s, spec);
            PhaseField jb = eval_J_direct(cls.representative, same_leaves(fb(tl), k), s, spec);
            ja -= jb;
            ja *= rule.weights[q];
            I += ja;
          }
        total += l2_norm(I);
      }
      sup = std::max(sup, total);
    }
    tab.rows.push_back({k, sup, k == 0 || prev == 0 ? 0 : sup / prev, iterate_bound(k, T, C, C0)});
    prev = sup;
  }
  return tab;
}

}  // namespace boltzkit
