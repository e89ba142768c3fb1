#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mergo/arith.hpp"
#include "mergo/error.hpp"
#include "mergo/fft.hpp"
#include "mergo/norms.hpp"
#include "mergo/phase.hpp"
#include "mergo/polyfam.hpp"
#include "mergo/summation.hpp"

namespace mergo {

// Lambda^{M,N}_{P_1..P_k}: functions f_0..f_k supported on [-M, M].
struct CountingConfig {
  std::vector<IntPoly> polys;
  std::int64_t N = 1;
  std::int64_t M = 1;
  double C = 1.0;

  int degree() const {
    int d = 0;
    for (const auto& p : polys) d = std::max(d, p.degree());
    return d;
  }
};

// M = max(ceil(C N^d), max |P_i(n)| over n in [N]).
inline CountingConfig make_config(std::vector<IntPoly> polys, std::int64_t N, double C = 1.0) {
  if (polys.empty()) throw domain_error("counting config: no polynomials");
  if (N < 1) throw domain_error("counting config: N must be >= 1");
  if (!(C >= 1.0)) throw domain_error("counting config: C must be >= 1");
  CountingConfig cfg{std::move(polys), N, 1, C};
  double M = std::ceil(C * std::pow(double(N), std::max(1, cfg.degree())));
  for (const auto& p : cfg.polys)
    for (std::int64_t n = 1; n <= N; ++n) M = std::max(M, std::abs(double(evaluate(p, n))));
  if (M > 1e12) throw size_error("counting config: M too large");
  cfg.M = static_cast<std::int64_t>(M);
  return cfg;
}

namespace detail {

inline void require_support(const ArithSeq& f, std::int64_t M, const char* what) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::int64_t x = f.start() + static_cast<std::int64_t>(i);
    if ((x < -M || x > M) && f.values()[i] != cplx{})
      throw domain_error(std::string(what) + ": support outside [-M, M]");
  }
}

// Nonzero range of f, or empty (lo > hi).
inline std::pair<std::int64_t, std::int64_t> nonzero_range(const ArithSeq& f) {
  auto v = f.values();
  std::size_t a = 0, b = v.size();
  while (a < b && v[a] == cplx{}) ++a;
  while (b > a && v[b - 1] == cplx{}) --b;
  if (a == b) return {1, 0};
  return {f.start() + std::int64_t(a), f.start() + std::int64_t(b) - 1};
}

// sum_m prod_i f_i(m + shift_i) over the common nonzero window.
inline cplx shifted_product_sum(const std::vector<const ArithSeq*>& fs, const std::vector<std::int64_t>& shift) {
  std::int64_t lo = INT64_MIN, hi = INT64_MAX;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto [a, b] = nonzero_range(*fs[i]);
    if (a > b) return cplx{};
    lo = std::max(lo, a - shift[i]);
    hi = std::min(hi, b - shift[i]);
  }
  if (lo > hi) return cplx{};
  std::vector<const cplx*> base(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i)
    base[i] = fs[i]->values().data() + (lo + shift[i] - fs[i]->start());
  std::size_t len = static_cast<std::size_t>(hi - lo + 1);
  return deterministic_sum<cplx>(len, [&](std::size_t t) {
    cplx p = base[0][t];
    for (std::size_t i = 1; i < base.size() && p != cplx{}; ++i) p *= base[i][t];
    return p;
  });
}

}  // namespace detail

// (1/(MN)) sum_m sum_{n in [N]} theta(n) f_0(m) f_1(m + P_1(n)) ... f_k(m + P_k(n)).
inline cplx lambda_sum(const ArithSeq& theta, const std::vector<ArithSeq>& fs, const CountingConfig& cfg) {
  if (fs.size() != cfg.polys.size() + 1) throw domain_error("lambda_op: need k + 1 functions for k polynomials");
  for (const auto& f : fs) detail::require_support(f, cfg.M, "lambda_op");
  std::vector<const ArithSeq*> ptr;
  for (const auto& f : fs) ptr.push_back(&f);
  std::vector<cplx> per_n(static_cast<std::size_t>(cfg.N));
  for (std::int64_t n = 1; n <= cfg.N; ++n) {
    cplx t = theta(n);
    if (t == cplx{}) continue;
    std::vector<std::int64_t> shift{0};
    for (const auto& p : cfg.polys) shift.push_back(evaluate(p, n));
    per_n[static_cast<std::size_t>(n - 1)] = t * detail::shifted_product_sum(ptr, shift);
  }
  kahan_sum<cplx> acc;
  for (const auto& v : per_n) acc += v;
  return acc.value();
}

inline cplx lambda_op(const ArithSeq& theta, const std::vector<ArithSeq>& fs, const CountingConfig& cfg) {
  return lambda_sum(theta, fs, cfg) / (double(cfg.M) * double(cfg.N));
}

struct GVNTReport {
  double lhs = 0.0;          // |Lambda^{M,N}|
  double lhs_theorem = 0.0;  // |sum| / N^{d+1}
  double norm_value = 0.0;
  std::string norm_kind;     // "u^{d+1}" or "U^s"
  std::string norm_estimate; // exact / certified / lower_bound
  int s_or_d = 0;
  double ratio = 0.0;        // lhs / norm_value (0 when the norm vanishes)
};

namespace detail {

inline void require_one_bounded(const ArithSeq& f, const char* what) {
  if (f.sup_abs() > 1.0 + 1e-12) throw domain_error(std::string(what) + ": functions must be 1-bounded");
}

inline GVNTReport fill_report(const cplx& sum, const CountingConfig& cfg, double norm, const std::string& kind,
                              NormEstimate::Kind est, int s) {
  GVNTReport r;
  r.lhs = std::abs(sum) / (double(cfg.M) * double(cfg.N));
  r.lhs_theorem = std::abs(sum) / std::pow(double(cfg.N), cfg.degree() + 1);
  r.norm_value = norm;
  r.norm_kind = kind;
  r.norm_estimate = kind_name(est);
  r.s_or_d = s;
  r.ratio = norm > 0 ? r.lhs / norm : 0.0;
  return r;
}

}  // namespace detail

// Distinct-degree family: lhs against a lower bound for ||theta||_{u^{d+1}[N]}.
inline GVNTReport gvnt_u_report(const ArithSeq& theta, const std::vector<ArithSeq>& fs, const CountingConfig& cfg,
                                USearchOptions opt = {}) {
  for (std::size_t i = 0; i < cfg.polys.size(); ++i) {
    if (cfg.polys[i].degree() < 1) throw domain_error("gvnt_u_report: polynomials must be nonconstant");
    if (i && cfg.polys[i].degree() <= cfg.polys[i - 1].degree())
      throw domain_error("gvnt_u_report: degrees must be strictly increasing");
  }
  detail::require_one_bounded(theta.window(1, cfg.N), "gvnt_u_report");
  for (const auto& f : fs) detail::require_one_bounded(f, "gvnt_u_report");
  int d = cfg.degree();
  cplx sum = lambda_sum(theta, fs, cfg);
  auto [est, w] = u_norm_search(theta, cfg.N, d + 1, opt);
  return detail::fill_report(sum, cfg, est.value, "u^" + std::to_string(d + 1), est.kind, d);
}

// General family: lhs against ||theta||_{U^s[N]} with s from required_s.
inline GVNTReport gvnt_U_report(const ArithSeq& theta, const std::vector<ArithSeq>& fs, const CountingConfig& cfg,
                                double budget = kBoxBudget) {
  detail::require_one_bounded(theta.window(1, cfg.N), "gvnt_U_report");
  for (const auto& f : fs) detail::require_one_bounded(f, "gvnt_U_report");
  int s = required_s(IntFamily(cfg.polys)).first;
  if (s > 4) throw cost_error("gvnt_U_report: s = " + std::to_string(s) + " exceeds the supported order 4");
  cplx sum = lambda_sum(theta, fs, cfg);
  NormEstimate est = s == 2 ? gowers_u2_fft(theta, cfg.N) : gowers_norm(theta, cfg.N, s, budget);
  return detail::fill_report(sum, cfg, est.value, "U^" + std::to_string(s), est.kind, s);
}

// F(m) = E_{n in [N]} theta(n) f_1(m + P_1(n)) ... f_k(m + P_k(n)) for m in [-M, M].
inline ArithSeq dual_function(const ArithSeq& theta, const std::vector<ArithSeq>& fs, const std::vector<IntPoly>& polys,
                              std::int64_t N, std::int64_t M) {
  if (fs.size() != polys.size()) throw domain_error("dual_function: need one function per polynomial");
  if (N < 1 || M < 0) throw domain_error("dual_function: need N >= 1, M >= 0");
  if (2 * M + 1 > (std::int64_t{1} << 28)) throw size_error("dual_function: window too large");
  std::vector<cplx> out(static_cast<std::size_t>(2 * M + 1));
  std::vector<std::vector<std::int64_t>> shifts;
  for (std::int64_t n = 1; n <= N; ++n) {
    std::vector<std::int64_t> s;
    for (const auto& p : polys) s.push_back(evaluate(p, n));
    shifts.push_back(std::move(s));
  }
  parallel_for(out.size(), [&](std::size_t i) {
    std::int64_t m = -M + std::int64_t(i);
    kahan_sum<cplx> acc;
    for (std::int64_t n = 1; n <= N; ++n) {
      cplx p = theta(n);
      for (std::size_t j = 0; j < fs.size() && p != cplx{}; ++j) p *= fs[j](m + shifts[std::size_t(n - 1)][j]);
      acc += p;
    }
    out[i] = acc.value() / double(N);
  });
  return ArithSeq(-M, std::move(out));
}

// phi(m) = e(alpha_b m) on block b = [anchor + b N', anchor + (b+1) N'), with
// alpha_b on the grid (1/Q) Z.
struct LocalLinearPhase {
  std::int64_t resolution = 1;
  std::int64_t anchor = 0;
  std::int64_t grid = 1;  // Q
  std::vector<std::int64_t> numerators;  // alpha_b = numerators[b] / Q
  std::vector<double> block_correlation;

  double frequency(std::size_t b) const { return double(numerators[b]) / double(grid); }
  cplx operator()(std::int64_t m) const {
    if (m < anchor) return {};
    std::size_t b = static_cast<std::size_t>((m - anchor) / resolution);
    if (b >= numerators.size()) return {};
    std::int64_t r = static_cast<std::int64_t>((static_cast<__int128>(numerators[b]) * m) % grid);
    return e(double(r) / double(grid));
  }
};

// sum over blocks of |sum_{m in block} F(m) e(-alpha m)|
inline double local_linear_correlation(const ArithSeq& F, const LocalLinearPhase& phi) {
  kahan_sum<double> total;
  for (std::size_t b = 0; b < phi.numerators.size(); ++b) {
    kahan_sum<cplx> acc;
    std::int64_t lo = phi.anchor + std::int64_t(b) * phi.resolution;
    for (std::int64_t m = lo; m < lo + phi.resolution; ++m) acc += F(m) * std::conj(phi(m));
    total += std::abs(acc.value());
  }
  return total.value();
}

// Blocks of length N' from the first point of F's support; on each block the
// grid frequency j/Q maximising |sum F(m) e(-j m / Q)| (ties: smallest j).
// Returns the phase and the sum of the block maxima.
inline std::pair<LocalLinearPhase, double> local_linear_extract(const ArithSeq& F, std::int64_t resolution,
                                                                std::int64_t grid) {
  if (resolution < 1) throw domain_error("local_linear_extract: resolution must be >= 1");
  if (grid < 1) throw domain_error("local_linear_extract: grid must be >= 1");
  if (grid > (std::int64_t{1} << 26)) throw size_error("local_linear_extract: grid too large");
  LocalLinearPhase phi;
  phi.resolution = resolution;
  phi.anchor = F.start();
  phi.grid = grid;
  std::size_t blocks = (F.size() + std::size_t(resolution) - 1) / std::size_t(resolution);
  std::vector<cplx> buf(static_cast<std::size_t>(grid)), out;
  kahan_sum<double> total;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::fill(buf.begin(), buf.end(), cplx{});
    std::int64_t lo = phi.anchor + std::int64_t(b) * resolution;
    for (std::int64_t m = lo; m < lo + resolution; ++m) {
      std::int64_t r = ((m % grid) + grid) % grid;
      buf[std::size_t(r)] += F(m);
    }
    dft_forward(buf, out);
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (std::norm(out[j]) > std::norm(out[best])) best = j;
    phi.numerators.push_back(std::int64_t(best));
    phi.block_correlation.push_back(std::abs(out[best]));
    total += std::abs(out[best]);
  }
  return {phi, total.value()};
}

struct CircleReport {
  double lhs = 0.0;             // |sum_m sum_n theta f_0 f_1(m+P(n))| / N^{d+1}
  double rhs = 0.0;             // sup_bound * constant
  double sup_bound = 0.0;       // certified sup_xi |E theta(n) e(-xi P(n))| <= ||theta||_{u^{d+1}[N]}
  double sup_grid = 0.0;        // grid maximum behind sup_bound
  double constant = 0.0;        // ||f_0||_2 ||f_1||_2 / N^d
  std::size_t grid_points = 0;
};

// Certified upper bound for sup_xi |E_{n in [N]} theta(n) e(-xi P(n))|.
inline std::pair<double, double> poly_exponential_sup(const ArithSeq& theta, const IntPoly& P, std::int64_t N,
                                                      std::size_t* grid_points = nullptr) {
  std::vector<std::int64_t> vals;
  for (std::int64_t n = 1; n <= N; ++n) vals.push_back(evaluate(P, n));
  std::int64_t lo = *std::min_element(vals.begin(), vals.end());
  std::int64_t hi = *std::max_element(vals.begin(), vals.end());
  std::int64_t W = hi - lo;
  if (W > (std::int64_t{1} << 24)) throw size_error("circle_method_bound: P([N]) too wide");
  if (W == 0) {
    kahan_sum<cplx> acc;
    for (std::int64_t n = 1; n <= N; ++n) acc += theta(n);
    double v = std::abs(acc.value()) / double(N);
    if (grid_points) *grid_points = 1;
    return {v, v};
  }
  std::size_t M = next_pow2(static_cast<std::size_t>(3 * (W + 1)));
  std::vector<cplx> buf(M), out;
  for (std::int64_t n = 1; n <= N; ++n) buf[std::size_t(vals[std::size_t(n - 1)] - lo)] += theta(n);
  dft_forward(buf, out);
  double g = 0.0;
  for (const auto& v : out) g = std::max(g, std::norm(v));
  g = std::sqrt(g) / double(N);
  if (grid_points) *grid_points = M;
  return {detail::grid_sup_bound(g, double(W), M), g};
}

// Lemma for k = 1: writing the m-sum through the Fourier transform,
// |sum_m sum_n theta(n) f_0(m) f_1(m + P(n))| <= sup_xi |sum_n theta(n) e(-xi P(n))|
//   * ||f_0||_2 ||f_1||_2 (Cauchy-Schwarz and Parseval), and the supremum is at
// most N ||theta||_{u^{d+1}[N]}. Dividing by N^{d+1}:
//   lhs <= sup_bound * ||f_0||_2 ||f_1||_2 / N^d <= (2C + N^{-d}) ||theta||_{u^{d+1}[N]}.
inline CircleReport circle_method_bound(const ArithSeq& theta, const ArithSeq& f0, const ArithSeq& f1, const IntPoly& P,
                                        std::int64_t N, double C = 1.0) {
  if (N < 1) throw domain_error("circle_method_bound: N must be >= 1");
  if (P.degree() < 1) throw domain_error("circle_method_bound: P must be nonconstant");
  int d = P.degree();
  double Nd = std::pow(double(N), d);
  auto half = static_cast<std::int64_t>(std::floor(C * Nd));
  detail::require_support(f0, half, "circle_method_bound");
  detail::require_support(f1, half, "circle_method_bound");
  detail::require_one_bounded(f0, "circle_method_bound");
  detail::require_one_bounded(f1, "circle_method_bound");
  CircleReport r;
  std::vector<const ArithSeq*> ptr{&f0, &f1};
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx t = theta(n);
    if (t == cplx{}) continue;
    acc += t * detail::shifted_product_sum(ptr, {0, evaluate(P, n)});
  }
  r.lhs = std::abs(acc.value()) / std::pow(double(N), d + 1);
  auto l2 = [](const ArithSeq& f) {
    kahan_sum<double> s;
    for (const auto& v : f.values()) s += std::norm(v);
    return std::sqrt(s.value());
  };
  r.constant = l2(f0) * l2(f1) / Nd;
  auto [sup, grid] = poly_exponential_sup(theta, P, N, &r.grid_points);
  r.sup_bound = sup;
  r.sup_grid = grid;
  r.rhs = r.sup_bound * r.constant;
  return r;
}

}  // namespace mergo
