#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mergo/error.hpp"
#include "mergo/summation.hpp"

namespace mergo {

using cplx = std::complex<double>;

// Finitely supported sequence on [start, start + size - 1], zero elsewhere.
// Integer-valued sequences may carry an exact copy of their values.
class ArithSeq {
 public:
  ArithSeq() = default;

  ArithSeq(std::int64_t start, std::vector<cplx> values) : start_(start), values_(std::move(values)) {
    for (const cplx& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw domain_error("ArithSeq: non-finite value");
  }

  static ArithSeq integral(std::int64_t start, std::vector<std::int64_t> ints) {
    std::vector<cplx> v(ints.size());
    for (std::size_t i = 0; i < ints.size(); ++i) v[i] = cplx(static_cast<double>(ints[i]), 0.0);
    ArithSeq s(start, std::move(v));
    s.exact_ = std::move(ints);
    return s;
  }

  // Zero sequence on [lo, hi].
  static ArithSeq zeros(std::int64_t lo, std::int64_t hi) {
    return integral(lo, std::vector<std::int64_t>(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0, 0));
  }

  template <class F>
  static ArithSeq tabulate(std::int64_t lo, std::int64_t hi, F&& fn) {
    std::vector<cplx> v(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(lo + static_cast<std::int64_t>(i));
    return ArithSeq(lo, std::move(v));
  }

  std::int64_t start() const { return start_; }
  std::int64_t last() const { return start_ + static_cast<std::int64_t>(values_.size()) - 1; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool contains(std::int64_t n) const { return n >= start_ && n <= last(); }

  cplx operator()(std::int64_t n) const {
    return contains(n) ? values_[static_cast<std::size_t>(n - start_)] : cplx{};
  }
  std::optional<std::int64_t> exact_at(std::int64_t n) const {
    if (!exact_) return std::nullopt;
    return contains(n) ? (*exact_)[static_cast<std::size_t>(n - start_)] : 0;
  }

  std::span<const cplx> values() const { return values_; }
  const std::optional<std::vector<std::int64_t>>& exact() const { return exact_; }

  // Values on [lo, hi], zero where this sequence has no support.
  ArithSeq window(std::int64_t lo, std::int64_t hi) const {
    if (exact_) {
      std::vector<std::int64_t> v(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = *exact_at(lo + static_cast<std::int64_t>(i));
      return integral(lo, std::move(v));
    }
    return tabulate(lo, hi, [this](std::int64_t n) { return (*this)(n); });
  }

  ArithSeq scaled(cplx c) const {
    std::vector<cplx> v(values_);
    for (cplx& x : v) x *= c;
    return ArithSeq(start_, std::move(v));
  }

  ArithSeq shifted(std::int64_t t) const {
    ArithSeq s = *this;
    s.start_ -= t;
    return s;
  }

  double sup_abs() const {
    double m = 0;
    for (const cplx& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_zero() const {
    for (const cplx& v : values_)
      if (v != cplx{}) return false;
    return true;
  }

  // True if every nonzero value lies in [lo, hi].
  bool supported_in(std::int64_t lo, std::int64_t hi) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      std::int64_t n = start_ + static_cast<std::int64_t>(i);
      if ((n < lo || n > hi) && values_[i] != cplx{}) return false;
    }
    return true;
  }

 private:
  std::int64_t start_ = 1;
  std::vector<cplx> values_;
  std::optional<std::vector<std::int64_t>> exact_;
};

inline constexpr std::uint64_t kSieveMax = std::uint64_t{1} << 34;
inline constexpr std::uint64_t kTableLimit = 10'000'000;

// Smallest-prime-factor table for [1, N].
class FactorTable {
 public:
  explicit FactorTable(std::uint64_t n) : n_(n) {
    if (n > 200'000'000) throw size_error("FactorTable: limit too large");
    spf_.assign(n + 1, 0);
    for (std::uint64_t i = 2; i <= n; ++i) {
      if (spf_[i] == 0) {
        spf_[i] = static_cast<std::uint32_t>(i);
        primes_.push_back(static_cast<std::uint32_t>(i));
      }
      for (std::uint32_t p : primes_) {
        std::uint64_t m = p * i;
        if (p > spf_[i] || m > n) break;
        spf_[m] = p;
      }
    }
  }

  std::uint64_t limit() const { return n_; }
  std::uint32_t spf(std::uint64_t n) const { return spf_[n]; }
  const std::vector<std::uint32_t>& primes() const { return primes_; }

  // (p, e) pairs in increasing p.
  std::vector<std::pair<std::uint64_t, int>> factorize(std::uint64_t n) const {
    std::vector<std::pair<std::uint64_t, int>> out;
    while (n > 1) {
      std::uint64_t p = spf_[n];
      int e = 0;
      while (n % p == 0) {
        n /= p;
        ++e;
      }
      out.emplace_back(p, e);
    }
    return out;
  }

 private:
  std::uint64_t n_;
  std::vector<std::uint32_t> spf_;
  std::vector<std::uint32_t> primes_;
};

inline std::vector<std::uint64_t> primes_upto(std::uint64_t n) {
  std::vector<char> comp(n + 1, 0);
  std::vector<std::uint64_t> ps;
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (comp[i]) continue;
    ps.push_back(i);
    for (std::uint64_t j = i * i; j <= n; j += i) comp[j] = 1;
  }
  return ps;
}

// g(n) for n in [1, N] from rule(p, e); g(1) = 1.
// Uses a factor table below `table_limit`, a segmented sieve above it.
template <class T, class Rule>
std::vector<T> sieve_values(std::uint64_t N, Rule&& rule, std::uint64_t table_limit = kTableLimit) {
  if (N < 1) throw domain_error("sieve: N must be >= 1");
  if (N > kSieveMax) throw size_error("sieve: N exceeds supported range");
  std::vector<T> val(N, T(1));
  if (N <= table_limit) {
    FactorTable ft(N);
    for (std::uint64_t n = 2; n <= N; ++n) {
      std::uint64_t p = ft.spf(n), m = n;
      int e = 0;
      while (m % p == 0) {
        m /= p;
        ++e;
      }
      val[n - 1] = val[m - 1] * rule(p, e);
    }
    return val;
  }
  std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(N)));
  while (root * root > N) --root;
  while ((root + 1) * (root + 1) <= N) ++root;
  const auto ps = primes_upto(root);
  constexpr std::uint64_t seg = std::uint64_t{1} << 16;
  std::size_t nseg = static_cast<std::size_t>((N + seg - 1) / seg);
  parallel_for(nseg, [&](std::size_t s) {
    std::uint64_t lo = 1 + s * seg, hi = std::min(N, lo + seg - 1);
    std::vector<std::uint64_t> rem(hi - lo + 1);
    for (std::uint64_t n = lo; n <= hi; ++n) rem[n - lo] = n;
    for (std::uint64_t p : ps) {
      std::uint64_t first = (lo + p - 1) / p * p;
      for (std::uint64_t n = first; n <= hi; n += p) {
        std::uint64_t& r = rem[n - lo];
        int e = 0;
        while (r % p == 0) {
          r /= p;
          ++e;
        }
        val[n - 1] = val[n - 1] * rule(p, e);
      }
    }
    for (std::uint64_t n = lo; n <= hi; ++n)
      if (rem[n - lo] > 1) val[n - 1] = val[n - 1] * rule(rem[n - lo], 1);
  });
  return val;
}

struct MultiplicativeSpec {
  std::string name;
  std::function<cplx(std::uint64_t, int)> value;
  double divisor_bound_C = 0.0;
  // Optional integer form of `value`, enables the exact shadow.
  std::function<std::int64_t(std::uint64_t, int)> exact;
};

namespace spec {

inline MultiplicativeSpec mobius() {
  auto r = [](std::uint64_t, int e) -> std::int64_t { return e == 0 ? 1 : e == 1 ? -1 : 0; };
  return {"mobius", [r](std::uint64_t p, int e) { return cplx(double(r(p, e))); }, 0.0, r};
}

inline MultiplicativeSpec liouville() {
  auto r = [](std::uint64_t, int e) -> std::int64_t { return e % 2 ? -1 : 1; };
  return {"liouville", [r](std::uint64_t p, int e) { return cplx(double(r(p, e))); }, 0.0, r};
}

// d(n)^k; d^0 is the constant 1.
inline MultiplicativeSpec divisor_power(int k) {
  auto r = [k](std::uint64_t, int e) -> std::int64_t {
    std::int64_t v = 1;
    for (int i = 0; i < k; ++i) v *= e + 1;
    return v;
  };
  return {k == 1 ? "divisor" : "divisor^" + std::to_string(k),
          [r](std::uint64_t p, int e) { return cplx(double(r(p, e))); }, double(k), r};
}

inline MultiplicativeSpec divisor() { return divisor_power(1); }

}  // namespace spec

// Checks the seed value and the divisor bound on a sample of prime powers.
inline void validate(const MultiplicativeSpec& s) {
  if (!s.value) throw domain_error("MultiplicativeSpec: missing rule");
  if (!(s.divisor_bound_C >= 0)) throw domain_error("MultiplicativeSpec: C must be >= 0");
  static const std::uint64_t sample[] = {2, 3, 5, 7, 11, 13, 97, 101, 65537, 1000003};
  for (std::uint64_t p : sample) {
    if (s.value(p, 0) != cplx(1.0)) throw domain_error("MultiplicativeSpec: value at (p,0) must be 1");
    for (int e = 1; e <= 8; ++e) {
      cplx v = s.value(p, e);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw domain_error("MultiplicativeSpec: non-finite value");
      if (std::abs(v) > std::pow(e + 1.0, s.divisor_bound_C) * (1 + 1e-12))
        throw domain_error("MultiplicativeSpec: divisor bound violated at (" + std::to_string(p) + "," +
                           std::to_string(e) + ")");
      if (s.exact && double(s.exact(p, e)) != v.real())
        throw domain_error("MultiplicativeSpec: exact rule disagrees with value rule");
    }
  }
}

inline ArithSeq sieve_multiplicative(const MultiplicativeSpec& s, std::uint64_t N,
                                     std::uint64_t table_limit = kTableLimit) {
  validate(s);
  if (s.exact) return ArithSeq::integral(1, sieve_values<std::int64_t>(N, s.exact, table_limit));
  return ArithSeq(1, sieve_values<cplx>(N, s.value, table_limit));
}

inline ArithSeq sieve_mobius(std::uint64_t N) { return sieve_multiplicative(spec::mobius(), N); }
inline ArithSeq sieve_liouville(std::uint64_t N) { return sieve_multiplicative(spec::liouville(), N); }

struct SWReport {
  std::int64_t N = 0;
  double A = 0;
  double max_abs_progression_sum = 0;
  std::int64_t witness_q = 1;
  std::int64_t witness_a = 1;
};

// Largest |sum_{n<=N, n=a mod q} g(n)| over 1 <= a <= q <= (log N)^A.
// Residue class 0 is reported as a = q. Ties keep the smallest (q, a).
inline SWReport sw_discrepancy(const ArithSeq& g, double A, double budget = 4e10) {
  if (g.start() != 1) throw domain_error("sw_discrepancy: g must start at 1");
  const std::int64_t N = static_cast<std::int64_t>(g.size());
  if (N < 3) throw domain_error("sw_discrepancy: N must be >= 3");
  if (!(A > 0)) throw domain_error("sw_discrepancy: A must be positive");
  double qmax_real = std::pow(std::log(double(N)), A);
  std::int64_t Q = static_cast<std::int64_t>(std::floor(std::min(qmax_real, double(N))));
  Q = std::max<std::int64_t>(Q, 1);
  if (double(N) * double(Q) > budget) throw cost_error("sw_discrepancy: N*(log N)^A exceeds budget");

  SWReport rep{N, A, -1.0, 1, 1};
  const auto& ex = g.exact();
  for (std::int64_t q = 1; q <= Q; ++q) {
    std::vector<double> mags(static_cast<std::size_t>(q));
    if (ex) {
      std::vector<std::int64_t> acc(static_cast<std::size_t>(q), 0);
      std::int64_t r = 1 % q;
      for (std::int64_t n = 1; n <= N; ++n) {
        acc[static_cast<std::size_t>(r)] += (*ex)[static_cast<std::size_t>(n - 1)];
        if (++r == q) r = 0;
      }
      for (std::int64_t i = 0; i < q; ++i) mags[static_cast<std::size_t>(i)] = std::abs(double(acc[static_cast<std::size_t>(i)]));
    } else {
      std::vector<kahan_sum<cplx>> acc(static_cast<std::size_t>(q));
      auto vals = g.values();
      std::int64_t r = 1 % q;
      for (std::int64_t n = 1; n <= N; ++n) {
        acc[static_cast<std::size_t>(r)] += vals[static_cast<std::size_t>(n - 1)];
        if (++r == q) r = 0;
      }
      for (std::int64_t i = 0; i < q; ++i) mags[static_cast<std::size_t>(i)] = std::abs(acc[static_cast<std::size_t>(i)].value());
    }
    for (std::int64_t a = 1; a <= q; ++a) {
      double m = mags[static_cast<std::size_t>(a % q)];
      if (m > rep.max_abs_progression_sum) {
        rep.max_abs_progression_sum = m;
        rep.witness_q = q;
        rep.witness_a = a;
      }
    }
  }
  return rep;
}

}  // namespace mergo
