#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "mergo/error.hpp"

namespace mergo {

using cplx = std::complex<double>;

namespace detail {

struct fftw_plan_deleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// Planner calls are not thread safe; execution with the new-array interface is.
inline fftw_plan_s* forward_plan(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<fftw_plan_s, fftw_plan_deleter>> cache;
  std::lock_guard lock(fftw_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second.get();
  std::vector<cplx> a(n), b(n);
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw cost_error("fftw: cannot plan transform of size " + std::to_string(n));
  return cache.emplace(n, p).first->second.get();
}

}  // namespace detail

// out[k] = sum_x in[x] e(-k x / n). Sizes must match.
inline void dft_forward(const std::vector<cplx>& in, std::vector<cplx>& out) {
  std::size_t n = in.size();
  if (n == 0) return;
  if (n > (std::size_t{1} << 30)) throw size_error("transform too large");
  out.resize(n);
  fftw_plan_s* p = detail::forward_plan(n);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace mergo
