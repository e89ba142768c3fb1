#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mergo {

// Compensated accumulator. Works for double and std::complex<double>.
template <class T>
class kahan_sum {
 public:
  kahan_sum() = default;
  explicit kahan_sum(T init) : sum_(init) {}

  kahan_sum& operator+=(const T& x) {
    const T y = x - cor_;
    const T t = sum_ + y;
    cor_ = (t - sum_) - y;
    sum_ = t;
    return *this;
  }

  T value() const { return sum_; }

 private:
  T sum_{};
  T cor_{};
};

// Worker count: MERGO_THREADS if set and positive, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("MERGO_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(i) for i in [0, count). Work is split into contiguous chunks;
// callers must write results into slot i only, so output never depends on
// the thread count.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  unsigned nt = std::min<std::size_t>(thread_count(), count);
  if (nt <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(nt);
  std::size_t chunk = (count + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
}

inline constexpr std::size_t kSegment = 4096;

// Pairwise merge of per-segment partial sums in index order.
template <class T>
T pairwise_merge(std::vector<T> parts) {
  if (parts.empty()) return T{};
  while (parts.size() > 1) {
    std::size_t half = (parts.size() + 1) / 2;
    for (std::size_t i = 0; i < parts.size() / 2; ++i) parts[i] = parts[2 * i] + parts[2 * i + 1];
    if (parts.size() % 2) parts[half - 1] = parts.back();
    parts.resize(half);
  }
  return parts[0];
}

// Sum of term(i) over [0, n): fixed segments of kSegment terms, Kahan inside
// each segment, pairwise merge across. The result is independent of the
// number of worker threads.
template <class T, class Term>
T deterministic_sum(std::size_t n, Term&& term) {
  std::size_t nseg = (n + kSegment - 1) / kSegment;
  std::vector<T> parts(nseg);
  parallel_for(nseg, [&](std::size_t s) {
    kahan_sum<T> acc;
    std::size_t lo = s * kSegment, hi = std::min(n, lo + kSegment);
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    parts[s] = acc.value();
  });
  return pairwise_merge(std::move(parts));
}

}  // namespace mergo
