#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "boltzkit/error.hpp"

namespace boltzkit {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

using PlanKey = std::tuple<std::vector<int>, std::vector<int>, int>;

inline std::map<PlanKey, PlanHandle>& plan_cache() {
  static std::map<PlanKey, PlanHandle> cache;
  return cache;
}

inline fftw_plan_s* get_plan(const std::vector<int>& shape, const std::vector<int>& axes, int sign) {
  PlanKey key{shape, axes, sign};
  std::lock_guard lock(planner_mutex());
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second.get();

  const int rank = static_cast<int>(shape.size());
  std::vector<std::ptrdiff_t> stride(rank, 1);
  for (int i = rank - 2; i >= 0; --i) stride[i] = stride[i + 1] * shape[i + 1];
  std::vector<bool> on(rank, false);
  for (int a : axes) on[a] = true;

  std::vector<fftw_iodim> dims, loops;
  for (int i = 0; i < rank; ++i) {
    fftw_iodim d{shape[i], static_cast<int>(stride[i]), static_cast<int>(stride[i])};
    (on[i] ? dims : loops).push_back(d);
  }
  std::size_t total = 1;
  for (int s : shape) total *= static_cast<std::size_t>(s);
  auto* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_guru_dft(static_cast<int>(dims.size()), dims.data(),
                                   static_cast<int>(loops.size()), loops.data(), buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) throw RangeError("fft: planner rejected the requested transform");
  auto [it, ok] = cache.emplace(key, PlanHandle(p));
  return it->second.get();
}

}  // namespace detail

/// In-place unnormalised DFT along `axes` of a row-major array.
/// sign = -1 computes sum_j a_j e^{-2 pi i jm/n}, sign = +1 the conjugate kernel.
inline void dft_inplace(std::span<cplx> data, const std::vector<int>& shape,
                        const std::vector<int>& axes, int sign) {
  if (axes.empty()) return;
  auto* plan = detail::get_plan(shape, axes, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

namespace detail {

// (-1)^{sum of indices over the transformed axes}, cached per (shape, axes).
inline const std::vector<signed char>& checker_mask(const std::vector<int>& shape, const std::vector<int>& axes) {
  static std::mutex m;
  static std::map<std::pair<std::vector<int>, std::vector<int>>, std::unique_ptr<std::vector<signed char>>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{shape, axes}];
  if (!slot) {
    const int rank = static_cast<int>(shape.size());
    std::vector<bool> on(rank, false);
    for (int a : axes) on[a] = true;
    std::size_t total = 1;
    for (int s : shape) total *= static_cast<std::size_t>(s);
    slot = std::make_unique<std::vector<signed char>>(total);
    std::vector<int> idx(rank, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      int par = 0;
      for (int i = 0; i < rank; ++i)
        if (on[i]) par += idx[i];
      (*slot)[flat] = (par & 1) ? -1 : 1;
      for (int i = rank - 1; i >= 0; --i) {
        if (++idx[i] < shape[i]) break;
        idx[i] = 0;
      }
    }
  }
  return *slot;
}

}  // namespace detail

/// Centered transform along `axes`: index m of an axis of length n stands for
/// frequency m - n/2, physical sample j for position j - n/2. Since n is a
/// multiple of 4 this is the plain DFT conjugated by the checkerboard (-1)^j.
inline void centered_dft_inplace(std::span<cplx> data, const std::vector<int>& shape,
                                 const std::vector<int>& axes, int sign) {
  if (axes.empty()) return;
  const auto& mask = detail::checker_mask(shape, axes);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (mask[i] < 0) data[i] = -data[i];
  dft_inplace(data, shape, axes, sign);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (mask[i] < 0) data[i] = -data[i];
}

}  // namespace boltzkit
