#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "mergo/arith.hpp"
#include "mergo/error.hpp"
#include "mergo/fft.hpp"
#include "mergo/phase.hpp"
#include "mergo/summation.hpp"

namespace mergo {

struct NormEstimate {
  enum class Kind { exact, certified, lower_bound };
  double value = 0.0;
  Kind kind = Kind::exact;
  double epsilon = 0.0;  // meaningful for Kind::certified
  std::string detail;
  bool coarsened = false;
};

inline std::string kind_name(NormEstimate::Kind k) {
  switch (k) {
    case NormEstimate::Kind::exact: return "exact";
    case NormEstimate::Kind::certified: return "certified";
    case NormEstimate::Kind::lower_bound: return "lower_bound";
  }
  return "?";
}

// Phase sum_j c_j n^j with c = (c_1, ..., c_{s-1}).
struct PhaseWitness {
  std::vector<double> coefficients;
  double correlation = 0.0;
};

namespace detail {

inline std::vector<cplx> on_interval(const ArithSeq& f, std::int64_t N) {
  std::vector<cplx> g(static_cast<std::size_t>(std::max<std::int64_t>(N, 0)));
  for (std::int64_t n = 1; n <= N; ++n) g[static_cast<std::size_t>(n - 1)] = f(n);
  return g;
}

inline std::int64_t checked_pow(std::int64_t n, int j) {
  __int128 v = 1;
  for (int i = 0; i < j; ++i) {
    v *= n;
    if (v > INT64_MAX || v < INT64_MIN) throw overflow_error("n^j exceeds 64 bits");
  }
  return static_cast<std::int64_t>(v);
}

// frac(sum_j c_j n^j)
inline double phase_at(std::span<const double> c, std::int64_t n) {
  double t = 0.0;
  std::int64_t p = 1;
  for (double cj : c) {
    p *= n;
    t += frac_mul(cj, p);
  }
  return t - std::floor(t);
}

inline std::span<const cplx> trim(std::span<const cplx> f) {
  std::size_t lo = 0, hi = f.size();
  while (lo < hi && f[lo] == cplx{}) ++lo;
  while (hi > lo && f[hi - 1] == cplx{}) --hi;
  return f.subspan(lo, hi - lo);
}

// ||f||^{2^s} by the differencing recursion. Terms for h and -h agree
// (conjugate translates), so only h >= 0 is visited.
inline double box_power(std::span<const cplx> f, int s, std::vector<std::vector<cplx>>& scratch) {
  f = trim(f);
  if (f.empty()) return 0.0;
  if (s == 1) {
    kahan_sum<cplx> acc;
    for (const cplx& v : f) acc += v;
    return std::norm(acc.value());
  }
  std::vector<cplx>& buf = scratch[static_cast<std::size_t>(s)];
  const std::size_t L = f.size();
  kahan_sum<double> total;
  for (std::size_t h = 0; h < L; ++h) {
    buf.resize(L - h);
    for (std::size_t x = 0; x + h < L; ++x) buf[x] = std::conj(f[x + h]) * f[x];
    double t = box_power(std::span<const cplx>(buf.data(), L - h), s - 1, scratch);
    total += h == 0 ? t : 2.0 * t;
  }
  return total.value();
}

inline void box_guard(std::size_t L, int s, double budget) {
  if (s < 1) throw domain_error("Gowers norm: s must be >= 1");
  if (s > 4) throw cost_error("Gowers norm: s > 4 refused by cost guard");
  if (std::pow(double(L), double(s)) > budget)
    throw cost_error("Gowers norm: L^s = " + std::to_string(std::pow(double(L), double(s))) + " exceeds budget");
}

inline double box_power_top(std::span<const cplx> f, int s) {
  f = trim(f);
  if (f.empty()) return 0.0;
  if (s == 1) {
    std::vector<std::vector<cplx>> scratch(2);
    return box_power(f, 1, scratch);
  }
  const std::size_t L = f.size();
  std::vector<double> terms(L);
  parallel_for(L, [&](std::size_t h) {
    std::vector<std::vector<cplx>> scratch(static_cast<std::size_t>(s));
    std::vector<cplx> d(L - h);
    for (std::size_t x = 0; x + h < L; ++x) d[x] = std::conj(f[x + h]) * f[x];
    terms[h] = box_power(d, s - 1, scratch);
  });
  kahan_sum<double> total;
  for (std::size_t h = 0; h < L; ++h) total += h == 0 ? terms[h] : 2.0 * terms[h];
  return total.value();
}

inline double root(double p, int s) {
  if (p < 0) {
    if (p < -1e-9) throw std::logic_error("negative box-norm power");
    p = 0;
  }
  return std::pow(p, 1.0 / std::ldexp(1.0, s));
}

}  // namespace detail

inline constexpr double kBoxBudget = 8.6e9;

// ||f||_{U~^s(Z)}^{2^s}, the raw count.
inline double gowers_box_power(const ArithSeq& f, int s, double budget = kBoxBudget) {
  auto t = detail::trim(f.values());
  detail::box_guard(t.size(), s, budget);
  return detail::box_power_top(t, s);
}

inline double gowers_box_raw(const ArithSeq& f, int s, double budget = kBoxBudget) {
  return detail::root(gowers_box_power(f, s, budget), s);
}

inline NormEstimate gowers_norm(const ArithSeq& f, std::int64_t N, int s, double budget = kBoxBudget) {
  if (N < 1) throw domain_error("gowers_norm: N must be >= 1");
  detail::box_guard(static_cast<std::size_t>(N), s, budget);
  auto g = detail::on_interval(f, N);
  std::vector<cplx> one(static_cast<std::size_t>(N), cplx(1.0));
  double num = detail::box_power_top(g, s);
  double den = detail::box_power_top(one, s);
  return {detail::root(num / den, s), NormEstimate::Kind::exact, 0.0, "box recursion", false};
}

// Raw fourth power ||f||_{U~^2}^4 of any finitely supported f via the
// spectrum on a cyclic group large enough that quadruples do not wrap.
inline double gowers_u2_power_fft(const ArithSeq& f) {
  auto t = detail::trim(f.values());
  if (t.empty()) return 0.0;
  std::size_t M = next_pow2(2 * t.size());
  std::vector<cplx> x(M), X;
  std::copy(t.begin(), t.end(), x.begin());
  dft_forward(x, X);
  double s4 = deterministic_sum<double>(M, [&](std::size_t k) {
    double a = std::norm(X[k]);
    return a * a;
  });
  return s4 / double(M);
}

inline NormEstimate gowers_u2_fft(const ArithSeq& f, std::int64_t N) {
  if (N < 1) throw domain_error("gowers_u2_fft: N must be >= 1");
  if (N > (std::int64_t{1} << 26)) throw size_error("gowers_u2_fft: N too large");
  auto g = detail::on_interval(f, N);
  ArithSeq fn(1, std::move(g));
  double raw = gowers_u2_power_fft(fn);
  double n = double(N);
  double den = (2.0 * n * n * n + n) / 3.0;
  return {detail::root(raw / den, 2), NormEstimate::Kind::exact, 0.0, "fft fourth moment", false};
}

// |E_{n in [N]} f(n) e(-sum_j c_j n^j)|
inline double phase_correlation(const ArithSeq& f, std::int64_t N, std::span<const double> c) {
  if (N < 1) return 0.0;
  if (!c.empty()) detail::checked_pow(N, static_cast<int>(c.size()));
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx v = f(n);
    if (v == cplx{}) continue;
    acc += v * e(-detail::phase_at(c, n));
  }
  return std::abs(acc.value()) / double(N);
}

struct USearchOptions {
  double budget = 4194304.0;  // inner FFTs over the (c_2..c_{s-1}) grid
  int top_k = 8;
  int refine_iterations = 40;
};

// Lower bound for ||f||_{u^s[N]}: grid over c_2..c_{s-1} (step 1/(4N^j)),
// FFT over c_1 (step 1/(4N)), coordinate descent from the best grid points.
inline std::pair<NormEstimate, PhaseWitness> u_norm_search(const ArithSeq& f, std::int64_t N, int s,
                                                           USearchOptions opt = {}) {
  if (s < 2 || s > 4) throw domain_error("u_norm_search: s must be in {2,3,4}");
  if (N < 1) throw domain_error("u_norm_search: N must be >= 1");
  if (N > (std::int64_t{1} << 22)) throw size_error("u_norm_search: N too large");
  detail::checked_pow(N, s - 1);
  const int dims = s - 2;
  auto g = detail::on_interval(f, N);
  PhaseWitness w;
  w.coefficients.assign(static_cast<std::size_t>(s - 1), 0.0);
  NormEstimate est{0.0, NormEstimate::Kind::lower_bound, 0.0, "grid+fft+coordinate descent", false};
  bool zero = std::all_of(g.begin(), g.end(), [](const cplx& v) { return v == cplx{}; });
  if (zero) return {est, w};

  // grid sizes for c_j, j >= 2
  std::vector<std::int64_t> G(static_cast<std::size_t>(dims));
  double total = 1.0;
  for (int j = 0; j < dims; ++j) {
    G[j] = 4 * detail::checked_pow(N, j + 2);
    total *= double(G[j]);
  }
  if (total > opt.budget) {
    double shrink = std::pow(total / opt.budget, 1.0 / dims);
    total = 1.0;
    for (int j = 0; j < dims; ++j) {
      G[j] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(double(G[j]) / shrink)));
      total *= double(G[j]);
    }
    est.coarsened = true;
    est.detail += " (grid coarsened to budget)";
  }
  for (int j = 0; j < dims; ++j)
    if (G[j] > (std::int64_t{1} << 26)) {
      G[j] = std::int64_t{1} << 26;
      est.coarsened = true;
    }
  const std::size_t npts = static_cast<std::size_t>(total);
  const std::size_t M1 = static_cast<std::size_t>(4 * N);

  // e(-t/G_j) tables and n^j mod G_j
  std::vector<std::vector<cplx>> table(static_cast<std::size_t>(dims));
  std::vector<std::vector<std::int64_t>> pw(static_cast<std::size_t>(dims));
  for (int j = 0; j < dims; ++j) {
    table[j].resize(static_cast<std::size_t>(G[j]));
    for (std::int64_t t = 0; t < G[j]; ++t) table[j][t] = e(-double(t) / double(G[j]));
    pw[j].resize(static_cast<std::size_t>(N));
    for (std::int64_t n = 1; n <= N; ++n)
      pw[j][n - 1] = static_cast<std::int64_t>(static_cast<__int128>(detail::checked_pow(n, j + 2)) % G[j]);
  }

  struct Cand {
    double v;
    std::size_t idx;
    std::size_t k;
  };
  auto better = [](const Cand& a, const Cand& b) { return a.v > b.v || (a.v == b.v && (a.idx < b.idx || (a.idx == b.idx && a.k < b.k))); };
  const std::size_t K = static_cast<std::size_t>(std::max(1, opt.top_k));
  constexpr std::size_t chunk = 256;
  const std::size_t nchunks = (npts + chunk - 1) / chunk;
  std::vector<std::vector<Cand>> best(nchunks);
  parallel_for(nchunks, [&](std::size_t ci) {
    std::vector<cplx> h(M1), X;
    std::vector<Cand> local;
    // t[j][n] = k_j n^j mod G_j, advanced like an odometer as idx increases
    std::vector<std::vector<std::uint64_t>> t(static_cast<std::size_t>(dims), std::vector<std::uint64_t>(static_cast<std::size_t>(N)));
    std::vector<std::uint64_t> kj(static_cast<std::size_t>(dims));
    const std::size_t first = ci * chunk;
    {
      std::size_t rem = first;
      for (int j = 0; j < dims; ++j) {
        kj[j] = rem % static_cast<std::size_t>(G[j]);
        rem /= static_cast<std::size_t>(G[j]);
        for (std::int64_t n = 1; n <= N; ++n)
          t[j][n - 1] = kj[j] * static_cast<std::uint64_t>(pw[j][n - 1]) % static_cast<std::uint64_t>(G[j]);
      }
    }
    for (std::size_t idx = first; idx < std::min(npts, (ci + 1) * chunk); ++idx) {
      if (idx != first) {
        for (int j = 0; j < dims; ++j) {
          const std::uint64_t Gj = static_cast<std::uint64_t>(G[j]);
          if (++kj[j] < Gj) {
            for (std::int64_t n = 0; n < N; ++n) {
              std::uint64_t v = t[j][n] + static_cast<std::uint64_t>(pw[j][n]);
              t[j][n] = v >= Gj ? v - Gj : v;
            }
            break;
          }
          kj[j] = 0;
          std::fill(t[j].begin(), t[j].end(), 0);
        }
      }
      for (std::int64_t n = 1; n <= N; ++n) {
        cplx v = g[n - 1];
        for (int j = 0; j < dims; ++j) v *= table[j][t[j][n - 1]];
        h[n - 1] = v;
      }
      dft_forward(h, X);
      for (std::size_t k = 0; k < M1; ++k) {
        Cand c{std::norm(X[k]), idx, k};  // squared magnitude; only the order matters here
        if (local.size() < K) {
          local.push_back(c);
          std::sort(local.begin(), local.end(), better);
        } else if (better(c, local.back())) {
          local.back() = c;
          std::sort(local.begin(), local.end(), better);
        }
      }
    }
    best[ci] = std::move(local);
  });
  std::vector<Cand> all;
  for (auto& b : best) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end(), better);
  if (all.size() > K) all.resize(K);

  double best_v = -1.0;
  std::vector<double> best_c;
  for (const Cand& c : all) {
    std::vector<double> coef(static_cast<std::size_t>(s - 1));
    std::vector<double> step(static_cast<std::size_t>(s - 1));
    coef[0] = double(c.k) / double(M1);
    step[0] = 1.0 / double(M1);
    std::size_t rem = c.idx;
    for (int j = 0; j < dims; ++j) {
      std::int64_t kj = static_cast<std::int64_t>(rem % static_cast<std::size_t>(G[j]));
      rem /= static_cast<std::size_t>(G[j]);
      coef[j + 1] = double(kj) / double(G[j]);
      step[j + 1] = 1.0 / double(G[j]);
    }
    double cur = phase_correlation(f, N, coef);
    for (int it = 0; it < opt.refine_iterations; ++it) {
      bool improved = false;
      for (std::size_t j = 0; j < coef.size(); ++j)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> trial = coef;
          trial[j] = coef[j] + sgn * step[j];
          trial[j] -= std::floor(trial[j]);
          double v = phase_correlation(f, N, trial);
          if (v > cur) {
            cur = v;
            coef = trial;
            improved = true;
          }
        }
      if (!improved)
        for (double& st : step) st *= 0.5;
    }
    if (cur > best_v) {
      best_v = cur;
      best_c = coef;
    }
  }
  for (double& c : best_c) c -= std::floor(c);
  est.value = best_v;
  w.coefficients = best_c;
  w.correlation = best_v;
  return {est, w};
}

struct CertifyOptions {
  std::size_t max_evaluations = 3'000'000;
  std::size_t max_fft = std::size_t{1} << 22;
};

namespace detail {

// Upper bound for sup_c |T(c)| from samples of T on a grid of M points, where
// T is a trigonometric polynomial whose frequencies span `span`. At a maximiser
// of F = |T|^2 the derivative vanishes, and |F''| <= (2 pi span)^2 sup F, so
// the nearest grid point (distance <= 1/(2M)) loses at most a factor
// 1 - (pi span / M)^2 / 2 in F.
inline double grid_sup_bound(double gridmax, double span, std::size_t M) {
  double t = std::numbers::pi * span / double(M);
  double q = 1.0 - 0.5 * t * t;
  if (q <= 0.25) return std::numeric_limits<double>::infinity();
  return gridmax / std::sqrt(q) * (1.0 + 1e-12) + 1e-15;
}

}  // namespace detail

// ||f||_{u^s[N]} for s in {2,3}, N <= 64, to within eps. The value returned is
// achieved by the witness; the supremum lies in [value, value + eps].
//
// Inner supremum over c_1: FFT samples plus detail::grid_sup_bound.
// Outer supremum over c_2 (s = 3): best-first branch and bound on intervals
// [a, b]. The maximum over an interval is attained either at an endpoint
// (bounded by the endpoint's inner bound) or at an interior critical point,
// where F(c_1*, .) has zero derivative; then F at the midpoint is within
// (2 pi (N^2-1))^2 U^2 r^2 / 2 of it, U a bound for the supremum. A first-order
// bound min(2 pi min_k E|f(n)||n^2 - k|, pi (N^2-1) U) r is also applied.
inline std::pair<NormEstimate, PhaseWitness> u_norm_certified(const ArithSeq& f, std::int64_t N, int s, double eps,
                                                              CertifyOptions opt = {}) {
  if (s != 2 && s != 3) throw domain_error("u_norm_certified: s must be 2 or 3");
  if (N < 1 || N > 64) throw domain_error("u_norm_certified: requires 1 <= N <= 64");
  if (!(eps > 0)) throw domain_error("u_norm_certified: eps must be positive");
  auto g = detail::on_interval(f, N);
  NormEstimate est{0.0, NormEstimate::Kind::certified, eps, "", false};
  PhaseWitness w;
  w.coefficients.assign(static_cast<std::size_t>(s - 1), 0.0);
  if (std::all_of(g.begin(), g.end(), [](const cplx& v) { return v == cplx{}; })) {
    est.detail = "zero input";
    return {est, w};
  }
  const double pi = std::numbers::pi;
  std::size_t evaluations = 0;

  struct Inner {
    double lb = 0;
    double ub = 0;
    double c1 = 0;
    std::size_t M = 0;
  };
  std::vector<cplx> h, X;
  auto inner = [&](double c2, std::size_t M) -> Inner {
    if (++evaluations > opt.max_evaluations) throw cost_error("u_norm_certified: evaluation budget exhausted");
    h.assign(M, cplx{});
    for (std::int64_t n = 1; n <= N; ++n) h[n - 1] = g[n - 1] * e(-frac_mul(c2, n * n));
    dft_forward(h, X);
    double m = -1;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < M; ++k) {
      double a = std::norm(X[k]);
      if (a > m) {
        m = a;
        arg = k;
      }
    }
    m = std::sqrt(m) / double(N);
    return {m, detail::grid_sup_bound(m, double(N - 1), M), double(arg) / double(M), M};
  };
  const std::size_t M0 = next_pow2(static_cast<std::size_t>(16 * N));

  double LB = -1;
  auto take = [&](const Inner& r, double c2) {
    if (r.lb > LB) {
      LB = r.lb;
      w.coefficients[0] = r.c1;
      if (s == 3) w.coefficients[1] = c2;
    }
  };
  auto refine = [&](Inner& r, double c2) {
    if (r.M >= opt.max_fft) throw cost_error("u_norm_certified: eps infeasible within FFT cap");
    r = inner(c2, r.M * 2);
    take(r, c2);
  };

  if (s == 2) {
    Inner r = inner(0.0, M0);
    take(r, 0.0);
    while (r.ub - LB > eps) refine(r, 0.0);
    est.detail = "fft grid " + std::to_string(r.M);
  } else {
    std::vector<std::pair<double, double>> wts;
    double mass = 0;
    for (std::int64_t n = 1; n <= N; ++n) {
      double a = std::abs(g[n - 1]);
      wts.emplace_back(double(n * n), a);
      mass += a;
    }
    double acc = 0, kappa = 0;
    for (auto& [x, a] : wts) {
      acc += a;
      if (acc >= mass / 2) {
        kappa = x;
        break;
      }
    }
    double Ldirect = 0;
    for (auto& [x, a] : wts) Ldirect += a * std::abs(x - kappa);
    Ldirect *= 2 * pi / double(N);
    const double span2 = double(N * N - 1);

    struct Node {
      double key;
      double a, b;
      Inner ia, ib, ic;
    };
    auto node_bound = [&](const Node& nd, double U, int* which) {
      double r = (nd.b - nd.a) / 2;
      double lip = std::min(Ldirect, pi * span2 * U) * r;
      double quad = std::sqrt(nd.ic.ub * nd.ic.ub + 0.5 * std::pow(2 * pi * span2 * U * r, 2));
      double interior = std::min(nd.ic.ub + lip, quad);
      double best = interior;
      *which = 2;
      if (nd.ia.ub > best) best = nd.ia.ub, *which = 0;
      if (nd.ib.ub > best) best = nd.ib.ub, *which = 1;
      return best;
    };
    auto cmp = [](const Node& x, const Node& y) { return x.key < y.key || (x.key == y.key && x.a > y.a); };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> pq(cmp);

    const std::int64_t cells = 4 * N * N;
    std::vector<Inner> ends(static_cast<std::size_t>(cells + 1));
    for (std::int64_t i = 0; i < cells; ++i) {
      ends[i] = inner(double(i) / double(cells), M0);
      take(ends[i], double(i) / double(cells));
    }
    ends[cells] = ends[0];  // c_2 = 1 is c_2 = 0
    double U = 0;
    std::vector<Node> init;
    for (std::int64_t i = 0; i < cells; ++i) {
      Node nd{0, double(i) / double(cells), double(i + 1) / double(cells), ends[i], ends[i + 1], {}};
      nd.ic = inner((nd.a + nd.b) / 2, M0);
      take(nd.ic, (nd.a + nd.b) / 2);
      U = std::max({U, nd.ia.ub, nd.ic.ub});
      init.push_back(nd);
    }
    U += Ldirect * 0.5 / double(cells);  // valid global bound
    for (Node& nd : init) {
      int wh;
      nd.key = node_bound(nd, U, &wh);
      pq.push(nd);
    }
    while (true) {
      Node nd = pq.top();
      pq.pop();
      U = std::min(U, nd.key);
      int which;
      double ub = node_bound(nd, U, &which);
      if (ub < nd.key) {
        nd.key = ub;
        pq.push(nd);
        continue;
      }
      if (ub <= LB + eps) {
        est.detail = "branch and bound over c2, " + std::to_string(evaluations) + " inner evaluations";
        break;
      }
      Inner* target = which == 0 ? &nd.ia : which == 1 ? &nd.ib : &nd.ic;
      double c2t = which == 0 ? nd.a : which == 1 ? nd.b : (nd.a + nd.b) / 2;
      bool inner_loose = which != 2 || (nd.ic.ub - nd.ic.lb) > 0.5 * (ub - nd.ic.ub);
      if (inner_loose && target->ub - target->lb > 0.25 * eps) {
        refine(*target, c2t);
        nd.key = node_bound(nd, U, &which);
        pq.push(nd);
        continue;
      }
      if (nd.b - nd.a < 1e-13) throw cost_error("u_norm_certified: interval resolution exhausted");
      double mid = (nd.a + nd.b) / 2;
      Node left{0, nd.a, mid, nd.ia, nd.ic, {}};
      Node right{0, mid, nd.b, nd.ic, nd.ib, {}};
      for (Node* ch : {&left, &right}) {
        double c = (ch->a + ch->b) / 2;
        ch->ic = inner(c, nd.ic.M);
        take(ch->ic, c);
        ch->key = node_bound(*ch, U, &which);
        pq.push(*ch);
      }
    }
  }
  for (double& c : w.coefficients) c -= std::floor(c);
  w.correlation = phase_correlation(f, N, w.coefficients);
  est.value = w.correlation;
  return {est, w};
}

struct VdCReport {
  double lhs = 0;
  double rhs = 0;
  std::int64_t N = 0;
  std::int64_t H = 0;
  bool holds() const { return lhs <= rhs + 1e-12; }
};

// |E_{n in [N]} f(n)|^2 against (N+H)/N sum_h mu_H(h) E_{n in [N]} conj(f(n+h)) f(n),
// mu_H(h) = (H - |h|)/H^2.
inline VdCReport vdc_bound(const ArithSeq& f, std::int64_t N, std::int64_t H) {
  if (N < 1 || H < 1 || H > N) throw domain_error("vdc_bound: requires 1 <= H <= N");
  auto g = detail::on_interval(f, N);
  kahan_sum<cplx> s;
  for (const cplx& v : g) s += v;
  VdCReport r;
  r.N = N;
  r.H = H;
  r.lhs = std::norm(s.value() / double(N));
  kahan_sum<double> acc;
  for (std::int64_t h = -(H - 1); h <= H - 1; ++h) {
    kahan_sum<cplx> c;
    for (std::int64_t n = std::max<std::int64_t>(1, 1 - h); n <= std::min(N, N - h); ++n)
      c += std::conj(g[n + h - 1]) * g[n - 1];
    double mu = double(H - std::abs(h)) / double(H * H);
    acc += mu * c.value().real() / double(N);
  }
  r.rhs = double(N + H) / double(N) * acc.value();
  return r;
}

struct GcsReport {
  double lhs = 0;
  double rhs = 0;
  bool holds() const { return lhs <= rhs + 1e-9; }
};

// fs[i] is f_omega with omega_j = bit (j-1) of i. No conjugations are applied.
inline GcsReport gcs_check(const std::vector<ArithSeq>& fs, int s) {
  if (s != 2 && s != 3) throw domain_error("gcs_check: s must be 2 or 3");
  if (fs.size() != (std::size_t{1} << s)) throw domain_error("gcs_check: need 2^s functions");
  for (const auto& f : fs)
    if (f.size() > 64) throw cost_error("gcs_check: support exceeds cost guard (64)");
  GcsReport rep;
  rep.rhs = 1.0;
  for (const auto& f : fs) rep.rhs *= gowers_box_raw(f, s);
  for (const auto& f : fs)
    if (f.empty()) return {0.0, rep.rhs};
  std::vector<std::int64_t> lo(fs.size()), hi(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    lo[i] = fs[i].start();
    hi[i] = fs[i].last();
  }
  kahan_sum<cplx> acc;
  std::vector<std::int64_t> h(static_cast<std::size_t>(s));
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    cplx f0 = fs[0](x);
    if (f0 == cplx{}) continue;
    // h_j ranges over supp f_{e_j} - x
    std::function<void(int)> rec = [&](int j) {
      if (j == s) {
        cplx p = f0;
        for (std::size_t om = 1; om < fs.size() && p != cplx{}; ++om) {
          std::int64_t y = x;
          for (int b = 0; b < s; ++b)
            if (om >> b & 1) y += h[b];
          p *= fs[om](y);
        }
        acc += p;
        return;
      }
      std::size_t ej = std::size_t{1} << j;
      for (h[j] = lo[ej] - x; h[j] <= hi[ej] - x; ++h[j]) rec(j + 1);
    };
    rec(0);
  }
  rep.lhs = std::abs(acc.value());
  return rep;
}

struct U2Witness {
  double delta = 0;
  double alpha = 0;
  double correlation = 0;
};

// Guaranteed ratio correlation / delta^2 for the witness below:
// sup|E f e(-a n)| >= delta^2 sqrt((2N^2+1)/3)/N by Parseval, and the grid of
// step 1/(4N) loses at most a factor 1 - pi (N-1)/(8N) (Bernstein). Both
// factors are bounded below uniformly in N by sqrt(2/3) and 1 - pi/8.
inline constexpr double kU2InverseConstant = 0.81649658092772603 * (1.0 - std::numbers::pi / 8.0);

inline U2Witness u2_inverse_witness(const ArithSeq& f, std::int64_t N) {
  if (N < 1) throw domain_error("u2_inverse_witness: N must be >= 1");
  auto g = detail::on_interval(f, N);
  for (const cplx& v : g)
    if (std::abs(v) > 1.0 + 1e-12) throw domain_error("u2_inverse_witness: f must be 1-bounded");
  U2Witness r;
  r.delta = gowers_u2_fft(f, N).value;
  if (r.delta == 0.0) return r;
  const std::size_t M = static_cast<std::size_t>(4 * N);
  std::vector<cplx> h(M), X;
  std::copy(g.begin(), g.end(), h.begin());
  dft_forward(h, X);
  std::size_t arg = 0;
  for (std::size_t k = 1; k < M; ++k)
    if (std::norm(X[k]) > std::norm(X[arg])) arg = k;
  double a = double(arg) / double(M), step = 1.0 / double(M);
  std::vector<double> c(1);
  auto corr = [&](double al) {
    c[0] = al;
    return phase_correlation(f, N, c);
  };
  double cur = corr(a);
  for (int it = 0; it < 40; ++it) {
    bool improved = false;
    for (double sgn : {1.0, -1.0}) {
      double t = a + sgn * step;
      double v = corr(t);
      if (v > cur) {
        cur = v;
        a = t;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  r.alpha = a - std::floor(a);
  r.correlation = cur;
  return r;
}

// 1-periodic g = 1_[a,b] * K, K the triangle kernel of half-width w = eta/2,
// a = alpha + eta/2, b = beta - eta/2. Then g = 1 on [alpha+eta, beta-eta],
// g = 0 outside [alpha, beta] (mod 1) and c_0 = beta - alpha - eta.
class BumpFunction {
 public:
  BumpFunction(double alpha, double beta, double eta, int J) : alpha_(alpha), beta_(beta), eta_(eta), J_(J) {
    if (!(alpha >= -0.5 && alpha < beta && beta <= 0.5)) throw domain_error("vinogradov_bump: need -1/2 <= alpha < beta <= 1/2");
    auto nrm = [](double x) { return std::abs(x - std::nearbyint(x)); };
    double cap = std::min({0.5 - nrm(alpha), 0.5 - nrm(beta), nrm(alpha - beta) / 2});
    if (!(eta > 0 && eta < cap)) throw domain_error("vinogradov_bump: eta outside admissible range");
    if (J < 0) throw domain_error("vinogradov_bump: J must be >= 0");
    c_.resize(static_cast<std::size_t>(2 * J + 1));
    for (int j = -J; j <= J; ++j) c_[static_cast<std::size_t>(j + J)] = coefficient(j);
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double eta() const { return eta_; }
  int J() const { return J_; }
  const std::vector<cplx>& coefficients() const { return c_; }
  cplx c(int j) const { return (j >= -J_ && j <= J_) ? c_[static_cast<std::size_t>(j + J_)] : coefficient(j); }

  // Closed-form Fourier coefficient.
  cplx coefficient(long j) const {
    const double pi = std::numbers::pi;
    double a = alpha_ + eta_ / 2, b = beta_ - eta_ / 2, w = eta_ / 2;
    if (j == 0) return cplx(b - a);
    double jd = double(j);
    cplx box = (e(-jd * a) - e(-jd * b)) / cplx(0.0, 2 * pi * jd);
    double x = pi * jd * w;
    double sinc = std::sin(x) / x;
    return box * (sinc * sinc);
  }

  // Exact value, x taken mod 1 into [-1/2, 1/2).
  double operator()(double x) const {
    x -= std::floor(x + 0.5);
    double a = alpha_ + eta_ / 2, b = beta_ - eta_ / 2, w = eta_ / 2;
    auto Phi = [w](double u) {
      if (u <= -w) return 0.0;
      if (u <= 0) return (u + w) * (u + w) / (2 * w * w);
      if (u < w) return 1.0 - (w - u) * (w - u) / (2 * w * w);
      return 1.0;
    };
    return Phi(x - a) - Phi(x - b);
  }

  // Truncated Fourier series sum_{|j| <= J} c_j e(jx).
  double fourier(double x) const {
    kahan_sum<cplx> acc;
    for (int j = -J_; j <= J_; ++j) acc += c_[static_cast<std::size_t>(j + J_)] * e(double(j) * x);
    return acc.value().real();
  }

  // Upper bound for sum_{|j| > K} |c_j|: terms up to J summed exactly plus
  // 2 sum_{j > max(K,J)} 1/(pi^3 w^2 j^3) <= 1/(pi^3 w^2 max(K,J)^2).
  double tail_bound(int K) const {
    const double pi = std::numbers::pi;
    double w = eta_ / 2;
    kahan_sum<double> acc;
    for (int j = K + 1; j <= J_; ++j) acc += std::abs(c_[static_cast<std::size_t>(j + J_)]) + std::abs(c_[static_cast<std::size_t>(-j + J_)]);
    double from = double(std::max(K, J_));
    return acc.value() + 1.0 / (pi * pi * pi * w * w * from * from);
  }

  // Indices with |c_j| > 10 eta (reported, not enforced).
  std::vector<int> large_coefficients() const {
    std::vector<int> out;
    for (int j = -J_; j <= J_; ++j)
      if (j != 0 && std::abs(c(j)) > 10 * eta_) out.push_back(j);
    return out;
  }

  // |c_j| <= min(beta - alpha + 2 eta, 2/(pi |j|)) for all stored j.
  bool coefficient_envelope_holds() const {
    for (int j = -J_; j <= J_; ++j) {
      double cap = beta_ - alpha_ + 2 * eta_;
      if (j != 0) cap = std::min(cap, 2.0 / (std::numbers::pi * std::abs(j)));
      if (std::abs(c(j)) > cap * (1 + 1e-12)) return false;
    }
    return true;
  }

 private:
  double alpha_, beta_, eta_;
  int J_;
  std::vector<cplx> c_;
};

inline BumpFunction vinogradov_bump(double alpha, double beta, double eta, int J) {
  return BumpFunction(alpha, beta, eta, J);
}

}  // namespace mergo
