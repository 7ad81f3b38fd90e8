#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "boltzkit/error.hpp"
#include "boltzkit/fft.hpp"
#include "boltzkit/grid.hpp"

namespace boltzkit {

/// XV: physical x, physical v. XXI: physical x, Fourier xi of v. KV: Fourier k of x, physical v.
enum class Repr { XV, XXI, KV };

inline const char* repr_name(Repr r) {
  switch (r) {
    case Repr::XV: return "XV";
    case Repr::XXI: return "XXI";
    case Repr::KV: return "KV";
  }
  return "?";
}

/// A complex function of one particle's phase-space variables on a SpectralGrid.
/// Layout is row-major over (x_1..x_d, v_1..v_d); in XXI the trailing axes are xi,
/// in KV the leading axes are k.
class PhaseField {
 public:
  PhaseField() = default;
  PhaseField(const SpectralGrid& g, Repr r) : grid_(g), repr_(r), data_(g.size()) {}
  PhaseField(const SpectralGrid& g, Repr r, std::vector<cplx> data)
      : grid_(g), repr_(r), data_(std::move(data)) {
    if (data_.size() != grid_.size()) throw ConfigurationError("field data size does not match grid");
  }

  const SpectralGrid& grid() const { return grid_; }
  Repr repr() const { return repr_; }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }
  cplx& at(std::size_t xi, std::size_t vi) { return data_[xi * grid_.v_count() + vi]; }
  const cplx& at(std::size_t xi, std::size_t vi) const { return data_[xi * grid_.v_count() + vi]; }

  /// Velocity-side slice of one spatial (or k) cell.
  std::span<cplx> cell(std::size_t xi) { return {data_.data() + xi * grid_.v_count(), grid_.v_count()}; }
  std::span<const cplx> cell(std::size_t xi) const {
    return {data_.data() + xi * grid_.v_count(), grid_.v_count()};
  }

  /// Measure of one grid cell in the current representation.
  double cell_measure() const {
    const int d = grid_.d();
    const double a = repr_ == Repr::KV ? grid_.dk() : grid_.dx();
    const double b = repr_ == Repr::XXI ? grid_.dxi() : grid_.dv();
    return std::pow(a * b, d);
  }

  PhaseField& operator+=(const PhaseField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  PhaseField& operator-=(const PhaseField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  PhaseField& operator*=(cplx a) {
    for (auto& z : data_) z *= a;
    return *this;
  }
  friend PhaseField operator+(PhaseField a, const PhaseField& b) { return a += b; }
  friend PhaseField operator-(PhaseField a, const PhaseField& b) { return a -= b; }
  friend PhaseField operator*(cplx s, PhaseField a) { return a *= s; }

  void check_compatible(const PhaseField& o) const {
    if (!(grid_ == o.grid_)) throw ConfigurationError("fields live on different grids");
    if (repr_ != o.repr_)
      throw ConfigurationError(std::string("representation mismatch: ") + repr_name(repr_) + " vs " +
                               repr_name(o.repr_));
  }

 private:
  friend PhaseField transform(const PhaseField&, Repr);
  SpectralGrid grid_;
  Repr repr_ = Repr::XV;
  std::vector<cplx> data_;
};

namespace detail {

inline void scale_all(std::span<cplx> d, double s) {
  for (auto& z : d) z *= s;
}

// e^{-i v.xi} forward in v with cell-measure normalisation; unitary.
inline void v_forward(PhaseField& f, std::span<cplx> d) {
  const auto& g = f.grid();
  centered_dft_inplace(d, g.shape(), g.v_axes(), -1);
  scale_all(d, std::pow(g.dv() / std::sqrt(2 * std::numbers::pi), g.d()));
}
inline void v_inverse(PhaseField& f, std::span<cplx> d) {
  const auto& g = f.grid();
  centered_dft_inplace(d, g.shape(), g.v_axes(), +1);
  scale_all(d, std::pow(g.dxi() / std::sqrt(2 * std::numbers::pi), g.d()));
}
inline void x_forward(PhaseField& f, std::span<cplx> d) {
  const auto& g = f.grid();
  centered_dft_inplace(d, g.shape(), g.x_axes(), -1);
  scale_all(d, std::pow(g.dx() / std::sqrt(2 * std::numbers::pi), g.d()));
}
inline void x_inverse(PhaseField& f, std::span<cplx> d) {
  const auto& g = f.grid();
  centered_dft_inplace(d, g.shape(), g.x_axes(), +1);
  scale_all(d, std::pow(g.dk() / std::sqrt(2 * std::numbers::pi), g.d()));
}

}  // namespace detail

/// Change representation. All transforms are unitary for the cell-measure
/// inner product of the respective representation.
inline PhaseField transform(const PhaseField& f, Repr target) {
  PhaseField out = f;
  auto d = out.data();
  auto hop = [&](Repr to) {
    const Repr from = out.repr_;
    if (from == Repr::XV && to == Repr::XXI) detail::v_forward(out, d);
    else if (from == Repr::XXI && to == Repr::XV) detail::v_inverse(out, d);
    else if (from == Repr::XV && to == Repr::KV) detail::x_forward(out, d);
    else if (from == Repr::KV && to == Repr::XV) detail::x_inverse(out, d);
    out.repr_ = to;
  };
  if (out.repr_ == target) return out;
  if (out.repr_ != Repr::XV) hop(Repr::XV);
  if (target != Repr::XV) hop(target);
  return out;
}

/// Plain L2 norm with the representation's cell measure.
inline double l2_norm(const PhaseField& f) {
  double s = 0;
  for (const auto& z : f.data()) s += std::norm(z);
  return std::sqrt(s * f.cell_measure());
}

inline double max_abs_diff(const PhaseField& a, const PhaseField& b) {
  a.check_compatible(b);
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double relative_l2_diff(const PhaseField& a, const PhaseField& b) {
  const double den = l2_norm(b);
  const double num = l2_norm(a - b);
  return den == 0 ? num : num / den;
}

/// Build an XV field from a function of (x, v) sampled on the grid.
template <class F>
PhaseField sample_xv(const SpectralGrid& g, F&& fn) {
  PhaseField f(g, Repr::XV);
  for (std::size_t xi = 0; xi < g.x_count(); ++xi) {
    auto x = g.x_point(xi);
    for (std::size_t vi = 0; vi < g.v_count(); ++vi) f.at(xi, vi) = fn(x, g.v_point(vi));
  }
  return f;
}

}  // namespace boltzkit
