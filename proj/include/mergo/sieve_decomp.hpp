#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "mergo/arith.hpp"
#include "mergo/error.hpp"
#include "mergo/phase.hpp"
#include "mergo/summation.hpp"

namespace mergo {

// Q(x) = exp((log log x)^2), R(x) = exp(log x / (log log x)^2); both 1 for x < 3.
struct RestrictionWindow {
  double lo = 1.0;
  double hi = 1.0;

  bool contains(double p) const { return lo < p && p < hi; }
  bool empty() const { return !(lo < hi); }
};

inline RestrictionWindow window_real(double x) {
  if (!(x >= 1.0)) throw domain_error("window: argument must be >= 1");
  if (x < 3.0) return {1.0, 1.0};
  double t = std::log(std::log(x));
  return {std::exp(t * t), std::exp(std::log(x) / (t * t))};
}

// (log Q, log R) from log x, for arguments beyond double range.
inline std::pair<double, double> window_log(double log_x) {
  if (!(log_x >= std::log(3.0))) throw domain_error("window_log: need x >= 3");
  double t = std::log(log_x);
  return {t * t, log_x / (t * t)};
}

inline RestrictionWindow window(std::uint64_t n) {
  if (n < 1) throw domain_error("window: n must be >= 1");
  if (n <= 2) return {1.0, 1.0};
  return window_real(double(n));
}

// With t = log log n, Q_n < R_n iff t^4 < e^t. Returns the two roots (t_low, t_high)
// of t^4 = e^t for t > 0: the window is open for t < t_low and for t > t_high.
inline std::pair<double, double> window_thresholds() {
  auto f = [](double t) { return 4.0 * std::log(t) - t; };
  auto bisect = [&](double a, double b) {
    for (int i = 0; i < 200; ++i) {
      double m = 0.5 * (a + b);
      if ((f(a) < 0) == (f(m) < 0)) a = m;
      else b = m;
    }
    return 0.5 * (a + b);
  };
  return {bisect(1.0, 2.0), bisect(2.0, 20.0)};
}

// Smallest integer n0 >= 3 such that Q_n < R_n for all n >= n0, returned as
// log log n0 (n0 itself exceeds any machine integer).
inline double window_n0_loglog() { return window_thresholds().second; }

// Largest n with Q_n < R_n on the initial stretch [3, n].
inline std::uint64_t window_initial_end() {
  std::uint64_t n = 3;
  while (!window(n + 1).empty()) ++n;
  return n;
}

namespace detail {

inline bool has_prime_in(const FactorTable& ft, std::uint64_t n, const RestrictionWindow& w) {
  if (w.empty()) return false;
  for (const auto& [p, e] : ft.factorize(n))
    if (w.contains(double(p))) return true;
  return false;
}

inline void require_from_one(const ArithSeq& g, const char* what) {
  if (g.start() != 1) throw domain_error(std::string(what) + ": sequence must start at 1");
  if (g.size() > 200'000'000) throw size_error(std::string(what) + ": N too large");
}

}  // namespace detail

// g~(n) = g(n) if some prime p | n lies in (Q_n, R_n), else 0.
inline ArithSeq restrict(const ArithSeq& g) {
  detail::require_from_one(g, "restrict");
  std::uint64_t N = g.size();
  FactorTable ft(std::max<std::uint64_t>(N, 1));
  std::vector<cplx> out(N);
  std::optional<std::vector<std::int64_t>> ex;
  if (g.exact()) ex.emplace(N, 0);
  parallel_for(N, [&](std::size_t i) {
    std::uint64_t n = i + 1;
    if (detail::has_prime_in(ft, n, window(n))) {
      out[i] = g.values()[i];
      if (ex) (*ex)[i] = (*g.exact())[i];
    }
  });
  if (ex) return ArithSeq::integral(1, std::move(*ex));
  return ArithSeq(1, std::move(out));
}

// E_{n <= N} |g(n) - h(n)|^r
inline double lr_distance(const ArithSeq& g, const ArithSeq& h, double r, std::int64_t N) {
  if (!(r >= 1.0)) throw domain_error("lr_distance: r must be >= 1");
  if (N < 1) throw domain_error("lr_distance: N must be >= 1");
  double s = deterministic_sum<double>(std::size_t(N), [&](std::size_t i) {
    std::int64_t n = std::int64_t(i) + 1;
    double a = std::abs(g(n) - h(n));
    return a == 0.0 ? 0.0 : std::pow(a, r);
  });
  return s / double(N);
}

struct Decomposition {
  ArithSeq g1;
  ArithSeq g2;
};

// g1 = restrict(g), g2 = g - g1. Each value of g goes entirely to one part.
inline Decomposition sw_decompose(const ArithSeq& g) {
  auto g1 = restrict(g);
  std::size_t N = g.size();
  if (g.exact()) {
    std::vector<std::int64_t> v(N);
    for (std::size_t i = 0; i < N; ++i) v[i] = (*g.exact())[i] - (*g1.exact())[i];
    return {std::move(g1), ArithSeq::integral(1, std::move(v))};
  }
  std::vector<cplx> v(N);
  for (std::size_t i = 0; i < N; ++i) v[i] = g1.values()[i] == cplx{} ? g.values()[i] : cplx{};
  return {std::move(g1), ArithSeq(1, std::move(v))};
}

struct SieveWeights {
  std::int64_t level = 0;
  std::uint64_t z1 = 0, z2 = 0;
  int beta = 1;
  std::map<std::uint64_t, int> weights;  // r -> lambda_r, nonzero entries only

  int operator[](std::uint64_t r) const {
    auto it = weights.find(r);
    return it == weights.end() ? 0 : it->second;
  }

  // nu(n) = sum_{r | n} lambda_r
  std::int64_t nu(std::uint64_t n) const {
    std::int64_t s = 0;
    for (const auto& [r, l] : weights) {
      if (r > n) break;
      if (n % r == 0) s += l;
    }
    return s;
  }
};

inline constexpr std::size_t kMaxSieveWeights = 1'000'000;

// Upper-bound beta-sieve weights: lambda_r = mu(r) for r = p_1 p_2 ... p_k with
// z1 < p_k < ... < p_1 < z2 and p_1 ... p_m p_m^beta < D for every odd m;
// lambda_r = 0 otherwise. Truncating the Buchstab iteration only at odd depths
// keeps sum_{r | n} lambda_r >= 1_{(n, P(z1, z2)) = 1}; with beta >= 1 every r <= D.
inline SieveWeights sieve_weights(std::int64_t D, std::uint64_t z1, std::uint64_t z2, int beta = 1) {
  if (D < 1) throw domain_error("sieve_weights: level must be >= 1");
  if (!(z1 >= 2 && z1 < z2)) throw domain_error("sieve_weights: need 2 <= z1 < z2");
  if (beta < 1) throw domain_error("sieve_weights: beta must be >= 1");
  if (z2 > 200'000'000) throw size_error("sieve_weights: sifting range too large");
  std::vector<std::uint64_t> ps;
  for (auto p : primes_upto(z2 - 1))
    if (p > z1) ps.push_back(p);
  SieveWeights w{D, z1, z2, beta, {{1, 1}}};
  // prime p extends r = p_1...p_{m-1} (all primes > p) to depth m
  auto admissible = [&](std::uint64_t r, std::uint64_t p, int m) {
    if (m % 2 == 0) return true;
    unsigned __int128 v = (unsigned __int128)r * p;
    for (int i = 0; i < beta && v < (unsigned __int128)D; ++i) v *= p;
    return v < (unsigned __int128)D;
  };
  auto rec = [&](auto&& self, std::uint64_t r, std::size_t below, int m, int sign) -> void {
    for (std::size_t i = below; i-- > 0;) {
      std::uint64_t p = ps[i];
      if (!admissible(r, p, m)) continue;
      std::uint64_t rp = r * p;
      w.weights[rp] = -sign;
      if (w.weights.size() > kMaxSieveWeights) throw cost_error("sieve_weights: too many weights");
      self(self, rp, i, m + 1, -sign);
    }
  };
  rec(rec, 1, ps.size(), 1, 1);
  return w;
}

struct SieveCheck {
  bool ok = true;
  std::uint64_t first_violation = 0;
  std::uint64_t checked = 0;
  bool values_in_range = true;
};

// nu(n) >= 1_{p | n => p not in (z1, z2)} for n <= n_max, computed by a divisor-sum
// sweep over the weights.
inline SieveCheck check_upper_bound(const SieveWeights& w, std::uint64_t n_max) {
  SieveCheck c;
  if (n_max > 200'000'000) throw size_error("check_upper_bound: n_max too large");
  c.values_in_range = w[1] == 1;
  for (const auto& [r, l] : w.weights) c.values_in_range = c.values_in_range && (l == 1 || l == -1);
  std::vector<std::int32_t> nu(n_max + 1, 0);
  for (const auto& [r, l] : w.weights)
    for (std::uint64_t n = r; n <= n_max; n += r) nu[n] += l;
  std::vector<char> rough(n_max + 1, 1);
  for (auto p : primes_upto(w.z2 - 1))
    if (p > w.z1)
      for (std::uint64_t n = p; n <= n_max; n += p) rough[n] = 0;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    ++c.checked;
    if (nu[n] < rough[n]) {
      c.ok = false;
      c.first_violation = n;
      break;
    }
  }
  c.ok = c.ok && c.values_in_range;
  return c;
}

// Exact rational value num/den.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational& operator+=(const Rational& o) {
    std::int64_t g = std::lcm(den, o.den);
    num = num * (g / den) + o.num * (g / o.den);
    den = g;
    std::int64_t k = std::gcd(num, den);
    if (k > 1) {
      num /= k;
      den /= k;
    }
    return *this;
  }
  friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
  double value() const { return double(num) / double(den); }
};

struct RamareResult {
  RestrictionWindow window;
  ArithSeq g_tilde;                       // g(n) 1_{some p | n in window}
  ArithSeq g_prime;                       // sum over n = p m, p in window
  std::vector<Rational> g_prime_exact;    // filled for integer-valued g
  std::vector<std::uint64_t> error_support;  // n with p^2 | n for a window prime p
};

// g'_N(n) = sum_{n = p m, p in window} g(p) g(m) / (omega_window(m) + 1), window
// (Q_N, R_N) unless given. The identity g~_N = g'_N holds off error_support.
inline RamareResult ramare_decompose(const MultiplicativeSpec& g, std::uint64_t N,
                                     std::optional<RestrictionWindow> win = std::nullopt) {
  if (N < 1) throw domain_error("ramare_decompose: N must be >= 1");
  if (N > 50'000'000) throw size_error("ramare_decompose: N too large");
  RamareResult res;
  res.window = win ? *win : window(N);
  auto gs = sieve_multiplicative(g, N);
  FactorTable ft(N);
  std::vector<std::uint8_t> omega(N + 1, 0);
  std::vector<char> err(N + 1, 0);
  std::vector<cplx> tilde(N), prime(N);
  const bool exact = gs.exact().has_value();
  std::optional<std::vector<std::int64_t>> tilde_ex;
  if (exact) {
    tilde_ex.emplace(N, 0);
    res.g_prime_exact.assign(N, Rational{});
  }
  std::vector<std::uint64_t> wp;
  for (std::uint64_t n = 1; n <= N; ++n) {
    for (const auto& [p, e] : ft.factorize(n))
      if (res.window.contains(double(p))) {
        ++omega[n];
        if (e >= 2) err[n] = 1;
      }
    if (omega[n] > 0) {
      tilde[n - 1] = gs.values()[n - 1];
      if (exact) (*tilde_ex)[n - 1] = (*gs.exact())[n - 1];
    }
    if (err[n]) res.error_support.push_back(n);
  }
  for (auto p : ft.primes())
    if (res.window.contains(double(p))) wp.push_back(p);
  for (std::uint64_t p : wp)
    for (std::uint64_t m = 1; m * p <= N; ++m) {
      std::uint64_t n = m * p;
      std::int64_t den = omega[m] + 1;
      prime[n - 1] += gs(std::int64_t(p)) * gs(std::int64_t(m)) / double(den);
      if (exact) res.g_prime_exact[n - 1] += Rational{*gs.exact_at(std::int64_t(p)) * *gs.exact_at(std::int64_t(m)), den};
    }
  res.g_tilde = exact ? ArithSeq::integral(1, std::move(*tilde_ex)) : ArithSeq(1, std::move(tilde));
  res.g_prime = ArithSeq(1, std::move(prime));
  return res;
}

// Exhaustive check of g~_N = g'_N off error_support (exact for integer-valued g,
// else to 1e-12); also checks that error_support is exactly the set of n with
// p^2 | n for a window prime p.
struct RamareCheck {
  bool identity_ok = true;
  bool support_ok = true;
  std::uint64_t mismatches_off_support = 0;
  std::uint64_t mismatches_on_support = 0;
  std::uint64_t first_mismatch = 0;
};

inline RamareCheck check_ramare(const RamareResult& r) {
  RamareCheck c;
  std::size_t N = r.g_tilde.size();
  std::vector<char> on(N + 1, 0);
  for (auto n : r.error_support) on[n] = 1;
  for (std::uint64_t n = 1; n <= N; ++n) {
    bool eq;
    if (!r.g_prime_exact.empty())
      eq = r.g_prime_exact[n - 1] == Rational{*r.g_tilde.exact_at(std::int64_t(n)), 1};
    else
      eq = std::abs(r.g_prime(std::int64_t(n)) - r.g_tilde(std::int64_t(n))) <= 1e-12;
    if (eq) continue;
    if (on[n]) {
      ++c.mismatches_on_support;
    } else {
      ++c.mismatches_off_support;
      if (c.identity_ok) c.first_mismatch = n;
      c.identity_ok = false;
    }
  }
  // reverse inclusion by direct trial division of each window prime square
  for (std::uint64_t n = 1; n <= N && c.support_ok; ++n) {
    bool hit = false;
    for (std::uint64_t p = 2; p * p <= n && !hit; ++p)
      if (r.window.contains(double(p)) && n % (p * p) == 0) {
        bool prime = true;
        for (std::uint64_t q = 2; q * q <= p; ++q) prime = prime && p % q != 0;
        hit = prime;
      }
    c.support_ok = bool(on[n]) == hit;
  }
  return c;
}

struct BilinearResult {
  cplx value;
  std::uint64_t terms = 0;
  bool hypothesis_ok = true;  // both supports inside [exp((log log N)^2), inf)
};

// sum_{ab <= N} alpha_a beta_b e(P(ab)), P(x) = sum_j c[j] x^j with real c[j].
inline BilinearResult bilinear_phase_sum(const ArithSeq& alpha, const ArithSeq& beta, const std::vector<double>& c,
                                         std::int64_t N) {
  if (N < 1) throw domain_error("bilinear_phase_sum: N must be >= 1");
  if (N > 2'000'000'000) throw size_error("bilinear_phase_sum: N too large");
  BilinearResult r;
  double floor_ = window_real(double(std::max<std::int64_t>(N, 1))).lo;
  auto lowest = [](const ArithSeq& f) -> std::int64_t {
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.values()[i] != cplx{}) return f.start() + std::int64_t(i);
    return std::numeric_limits<std::int64_t>::max();
  };
  std::int64_t la = lowest(alpha), lb = lowest(beta);
  if (la != std::numeric_limits<std::int64_t>::max() && double(la) < floor_) r.hypothesis_ok = false;
  if (lb != std::numeric_limits<std::int64_t>::max() && double(lb) < floor_) r.hypothesis_ok = false;
  if (la < 1 || lb < 1) throw domain_error("bilinear_phase_sum: supports must be positive");
  auto phase = [&](std::int64_t x) {
    long double t = 0, xp = 1;
    for (double cj : c) {
      long double v = (long double)cj * xp;
      t += v - std::floor(v);
      xp *= (long double)x;
    }
    return e(double(t - std::floor(t)));
  };
  std::int64_t a_hi = alpha.start() + std::int64_t(alpha.size()) - 1;
  kahan_sum<cplx> acc;
  for (std::int64_t a = std::max<std::int64_t>(la, 1); a <= std::min(a_hi, N); ++a) {
    cplx av = alpha(a);
    if (av == cplx{}) continue;
    std::int64_t bmax = N / a;
    for (std::int64_t b = lb; b <= bmax; ++b) {
      cplx bv = beta(b);
      if (bv == cplx{}) continue;
      acc += av * bv * phase(a * b);
      ++r.terms;
    }
  }
  r.value = acc.value();
  return r;
}

}  // namespace mergo
