#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mergo/arith.hpp"
#include "mergo/error.hpp"
#include "mergo/phase.hpp"
#include "mergo/polyfam.hpp"
#include "mergo/summation.hpp"

namespace mergo {

using Perm = std::vector<std::uint32_t>;

// Finite system: X = {0, ..., size-1} with uniform measure and transformations
// given as permutations. Powers T^k x are taken along the cycle of x.
class FiniteSystem {
 public:
  explicit FiniteSystem(std::vector<Perm> transforms, std::vector<std::uint32_t> moduli = {})
      : moduli_(std::move(moduli)) {
    if (transforms.empty()) throw domain_error("FiniteSystem: need at least one transformation");
    size_ = transforms[0].size();
    if (size_ == 0 || size_ > (std::size_t{1} << 26)) throw size_error("FiniteSystem: bad size");
    for (auto& t : transforms) {
      if (t.size() != size_) throw domain_error("FiniteSystem: transformations on different spaces");
      std::vector<char> seen(size_, 0);
      for (auto y : t) {
        if (y >= size_ || seen[y]) throw domain_error("FiniteSystem: transformation is not a bijection");
        seen[y] = 1;
      }
      cycles_.push_back(decompose(t));
    }
    transforms_ = std::move(transforms);
  }

  // T x = x + step mod M
  static FiniteSystem cyclic(std::uint32_t M, std::int64_t step = 1) {
    if (M < 1) throw domain_error("cyclic: M must be >= 1");
    Perm t(M);
    std::int64_t s = ((step % std::int64_t(M)) + std::int64_t(M)) % std::int64_t(M);
    for (std::uint32_t x = 0; x < M; ++x) t[x] = std::uint32_t((x + s) % M);
    return FiniteSystem({std::move(t)}, {M});
  }

  // Z/M_1 x ... x Z/M_k, T_j adds 1 in coordinate j. Point index: mixed radix,
  // coordinate 0 least significant.
  static FiniteSystem product_cyclic(const std::vector<std::uint32_t>& Ms) {
    if (Ms.empty()) throw domain_error("product_cyclic: need at least one factor");
    std::size_t total = 1;
    for (auto m : Ms) {
      if (m < 1) throw domain_error("product_cyclic: moduli must be >= 1");
      total *= m;
      if (total > (std::size_t{1} << 26)) throw size_error("product_cyclic: too many points");
    }
    std::vector<Perm> ts;
    std::size_t stride = 1;
    for (auto m : Ms) {
      Perm t(total);
      for (std::size_t x = 0; x < total; ++x) {
        std::size_t c = (x / stride) % m;
        t[x] = std::uint32_t(x - c * stride + ((c + 1) % m) * stride);
      }
      ts.push_back(std::move(t));
      stride *= m;
    }
    return FiniteSystem(std::move(ts), Ms);
  }

  std::size_t size() const { return size_; }
  std::size_t count() const { return transforms_.size(); }
  const std::vector<Perm>& transforms() const { return transforms_; }
  const std::vector<std::uint32_t>& moduli() const { return moduli_; }

  std::uint32_t apply(std::size_t j, std::uint32_t x) const { return transforms_.at(j)[x]; }

  // T_j^k x for any integer k
  std::uint32_t power(std::size_t j, std::uint32_t x, std::int64_t k) const {
    const auto& c = cycles_.at(j);
    std::int64_t L = c.len[x];
    std::int64_t i = ((std::int64_t(c.pos[x]) + k % L) % L + L) % L;
    return c.flat[c.offset[x] + std::size_t(i)];
  }

  // T_j^{P(n)} x with P(n) reduced exactly modulo the cycle length of x
  std::uint32_t poly_power(std::size_t j, std::uint32_t x, const IntPoly& P, std::int64_t n) const {
    const auto& c = cycles_.at(j);
    std::int64_t L = c.len[x];
    std::int64_t i = (std::int64_t(c.pos[x]) + evaluate_mod(P, n, L)) % L;
    return c.flat[c.offset[x] + std::size_t(i)];
  }

  bool commute() const {
    for (std::size_t a = 0; a < count(); ++a)
      for (std::size_t b = a + 1; b < count(); ++b)
        for (std::uint32_t x = 0; x < size_; ++x)
          if (transforms_[a][transforms_[b][x]] != transforms_[b][transforms_[a][x]]) return false;
    return true;
  }

 private:
  struct Cycles {
    std::vector<std::uint32_t> flat;    // points listed cycle by cycle
    std::vector<std::size_t> offset;    // start of x's cycle in flat
    std::vector<std::uint32_t> pos;     // x's index within its cycle
    std::vector<std::uint32_t> len;     // x's cycle length
  };

  static Cycles decompose(const Perm& t) {
    Cycles c;
    std::size_t n = t.size();
    c.offset.assign(n, 0);
    c.pos.assign(n, 0);
    c.len.assign(n, 0);
    std::vector<char> done(n, 0);
    for (std::uint32_t s = 0; s < n; ++s) {
      if (done[s]) continue;
      std::size_t off = c.flat.size();
      std::uint32_t x = s;
      do {
        done[x] = 1;
        c.pos[x] = std::uint32_t(c.flat.size() - off);
        c.offset[x] = off;
        c.flat.push_back(x);
        x = t[x];
      } while (x != s);
      auto L = std::uint32_t(c.flat.size() - off);
      for (std::size_t i = off; i < c.flat.size(); ++i) c.len[c.flat[i]] = L;
    }
    return c;
  }

  std::size_t size_ = 0;
  std::vector<Perm> transforms_;
  std::vector<Cycles> cycles_;
  std::vector<std::uint32_t> moduli_;
};

// Torus points and rotations in 64-bit fixed point: x = X / 2^64 mod 1.
// A rotation given as a double is replaced by the nearest multiple of 2^-64,
// after which n * alpha mod 1 is exact for every integer n.
using TorusPoint = std::vector<std::uint64_t>;

inline std::uint64_t to_fixed(double x) {
  if (!std::isfinite(x)) throw domain_error("torus: non-finite coordinate");
  double f = x - std::floor(x);
  long double s = std::ldexp((long double)f, 64);
  long double r = std::nearbyint(s);
  if (r >= std::ldexp((long double)1, 64)) return 0;
  return static_cast<std::uint64_t>(r);
}

inline double from_fixed(std::uint64_t X) { return std::ldexp(double(X), -64); }

// P(n) modulo 2^64
inline std::uint64_t evaluate_wrap(const IntPoly& P, std::int64_t n) {
  std::uint64_t r = 0, x = static_cast<std::uint64_t>(n);
  const auto& c = P.coefficients();
  for (std::size_t i = c.size(); i-- > 0;) r = r * x + static_cast<std::uint64_t>(c[i]);
  return r;
}

class TorusSystem {
 public:
  // One rotation vector per transformation, each of length dim.
  TorusSystem(std::size_t dim, const std::vector<std::vector<double>>& rotations) : dim_(dim) {
    if (dim < 1 || dim > 64) throw domain_error("TorusSystem: dimension must be in [1, 64]");
    if (rotations.empty()) throw domain_error("TorusSystem: need at least one rotation");
    for (const auto& a : rotations) {
      if (a.size() != dim) throw domain_error("TorusSystem: rotation has wrong dimension");
      TorusPoint v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = to_fixed(a[i]);
      rot_.push_back(std::move(v));
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return rot_.size(); }
  const std::vector<TorusPoint>& rotations() const { return rot_; }

  // x + k alpha_j, with k given modulo 2^64
  TorusPoint power_wrapped(std::size_t j, const TorusPoint& x, std::uint64_t k) const {
    TorusPoint y(x);
    const auto& a = rot_.at(j);
    for (std::size_t i = 0; i < dim_; ++i) y[i] += k * a[i];
    return y;
  }

  TorusPoint power(std::size_t j, const TorusPoint& x, std::int64_t k) const {
    return power_wrapped(j, x, static_cast<std::uint64_t>(k));
  }

  // Rotations always commute; the check is exact on fixed-point coordinates.
  bool commute() const { return true; }

  // Kronecker points x_i = i (phi_1, ..., phi_d) mod 1 with the generalized golden ratios.
  std::vector<TorusPoint> sample_points(std::size_t count) const {
    double g = 2.0;
    for (int it = 0; it < 100; ++it) g = std::pow(1.0 + g, 1.0 / double(dim_ + 1));
    std::vector<TorusPoint> out(count, TorusPoint(dim_));
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t c = 0; c < dim_; ++c) out[i][c] = to_fixed(double(i) * std::pow(1.0 / g, double(c + 1)));
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<TorusPoint> rot_;
};

// f(x) = sum_k c_k e(k . x) with at most 64 modes.
struct TorusObservable {
  std::vector<std::pair<std::vector<std::int64_t>, cplx>> modes;

  static TorusObservable character(std::vector<std::int64_t> k) { return {{{std::move(k), cplx(1.0)}}}; }
  static TorusObservable constant(cplx c, std::size_t dim) {
    return {{{std::vector<std::int64_t>(dim, 0), c}}};
  }

  void validate(std::size_t dim) const {
    if (modes.size() > 64) throw size_error("TorusObservable: more than 64 modes");
    for (const auto& [k, c] : modes)
      if (k.size() != dim) throw domain_error("TorusObservable: mode has wrong dimension");
  }

  cplx operator()(const TorusPoint& x) const {
    cplx s = 0;
    for (const auto& [k, c] : modes) {
      std::uint64_t ph = 0;
      for (std::size_t i = 0; i < k.size(); ++i) ph += static_cast<std::uint64_t>(k[i]) * x[i];
      s += c * e(from_fixed(ph));
    }
    return s;
  }

  double sup_bound() const {
    double s = 0;
    for (const auto& m : modes) s += std::abs(m.second);
    return s;
  }
};

using FiniteObservable = std::vector<cplx>;

namespace detail {

inline void check_weight(std::int64_t N, double A) {
  if (N < 1) throw domain_error("ergodic average: N must be >= 1");
  if (!(A >= 0)) throw domain_error("ergodic average: A must be >= 0");
  if (A > 0 && N < 3) throw domain_error("ergodic average: N >= 3 required when A > 0");
}

// (log N)^A sum / N
inline cplx normalize(cplx sum, std::int64_t N, double A) {
  cplx v = sum / double(N);
  return A == 0 ? v : v * std::pow(std::log(double(N)), A);
}

inline void check_theta(const ArithSeq& theta, std::int64_t N) {
  if (N > 2'000'000'000) throw size_error("ergodic average: N too large");
  (void)theta;
}

inline void check_finite_obs(const FiniteSystem& sys, const std::vector<FiniteObservable>& fs) {
  for (const auto& f : fs)
    if (f.size() != sys.size()) throw domain_error("observable table does not match the system");
}

}  // namespace detail

// (log N)^A (1/N) sum_{n<=N} theta(n) prod_i f_i(T_j^{P_i(n)} x), all f_i along one
// transformation T_j (default the first).
inline cplx average_at(const FiniteSystem& sys, std::uint32_t x, const ArithSeq& theta,
                       const std::vector<IntPoly>& polys, const std::vector<FiniteObservable>& fs,
                       std::int64_t N, double A = 0.0, std::size_t j = 0) {
  if (polys.size() != fs.size()) throw domain_error("average_at: need one observable per polynomial");
  if (x >= sys.size()) throw domain_error("average_at: point outside the system");
  detail::check_finite_obs(sys, fs);
  detail::check_weight(N, A);
  detail::check_theta(theta, N);
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx t = theta(n);
    if (t == cplx{}) continue;
    for (std::size_t i = 0; i < fs.size() && t != cplx{}; ++i) t *= fs[i][sys.poly_power(j, x, polys[i], n)];
    acc += t;
  }
  return detail::normalize(acc.value(), N, A);
}

inline cplx average_at(const TorusSystem& sys, const TorusPoint& x, const ArithSeq& theta,
                       const std::vector<IntPoly>& polys, const std::vector<TorusObservable>& fs, std::int64_t N,
                       double A = 0.0, std::size_t j = 0) {
  if (polys.size() != fs.size()) throw domain_error("average_at: need one observable per polynomial");
  if (x.size() != sys.dim()) throw domain_error("average_at: point has wrong dimension");
  for (const auto& f : fs) f.validate(sys.dim());
  detail::check_weight(N, A);
  detail::check_theta(theta, N);
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx t = theta(n);
    if (t == cplx{}) continue;
    for (std::size_t i = 0; i < fs.size(); ++i) t *= fs[i](sys.power_wrapped(j, x, evaluate_wrap(polys[i], n)));
    acc += t;
  }
  return detail::normalize(acc.value(), N, A);
}

// (log N)^A (1/N) sum_{n<=N} theta(n) prod_j f_j(T_j^n x)
inline cplx commuting_average(const FiniteSystem& sys, std::uint32_t x, const ArithSeq& theta,
                              const std::vector<FiniteObservable>& fs, std::int64_t N, double A = 0.0) {
  if (fs.size() != sys.count()) throw domain_error("commuting_average: need one observable per transformation");
  if (x >= sys.size()) throw domain_error("commuting_average: point outside the system");
  if (!sys.commute()) throw domain_error("commuting_average: transformations do not commute");
  detail::check_finite_obs(sys, fs);
  detail::check_weight(N, A);
  detail::check_theta(theta, N);
  std::vector<std::uint32_t> y(fs.size(), x);
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx t = theta(n);
    for (std::size_t j = 0; j < fs.size(); ++j) {
      y[j] = sys.apply(j, y[j]);
      t *= fs[j][y[j]];
    }
    acc += t;
  }
  return detail::normalize(acc.value(), N, A);
}

inline cplx commuting_average(const TorusSystem& sys, const TorusPoint& x, const ArithSeq& theta,
                              const std::vector<TorusObservable>& fs, std::int64_t N, double A = 0.0) {
  if (fs.size() != sys.count()) throw domain_error("commuting_average: need one observable per transformation");
  detail::check_weight(N, A);
  detail::check_theta(theta, N);
  kahan_sum<cplx> acc;
  for (std::int64_t n = 1; n <= N; ++n) {
    cplx t = theta(n);
    if (t == cplx{}) continue;
    for (std::size_t j = 0; j < fs.size(); ++j) t *= fs[j](sys.power(j, x, n));
    acc += t;
  }
  return detail::normalize(acc.value(), N, A);
}

struct LacunarySchedule {
  double eta = 1, B = 40;
  std::vector<double> real_values;      // exp(eta j^{2/B}), j = 1..j_max+1
  std::vector<std::int64_t> values;     // ceilings
  bool truncated = false;
  std::int64_t j0 = 1;                  // integer schedule: spacing holds on [j0, j_max]
  std::int64_t j0_real = 1;             // same for the real-valued schedule
  std::int64_t j_max = 0;

  // N_{j+1} <= N_j (1 + (log N_j)^{-(B/2 - 1)})
  bool spacing_ok(double a, double b) const {
    if (a <= 1.0) return b <= a;
    return b <= a * (1.0 + std::pow(std::log(a), -(B / 2.0 - 1.0)));
  }
};

inline LacunarySchedule lacunary_schedule(double eta, double B, std::int64_t j_max) {
  if (!(eta > 0)) throw domain_error("lacunary_schedule: eta must be positive");
  if (!(B >= 40)) throw domain_error("lacunary_schedule: B must be >= 40");
  if (j_max < 1) throw domain_error("lacunary_schedule: j_max must be >= 1");
  if (j_max > 100'000'000) throw size_error("lacunary_schedule: j_max too large");
  LacunarySchedule s;
  s.eta = eta;
  s.B = B;
  const double cap = std::ldexp(1.0, 62);
  for (std::int64_t j = 1; j <= j_max + 1; ++j) {
    double v = std::exp(eta * std::pow(double(j), 2.0 / B));
    if (!(v <= cap)) {
      s.truncated = true;
      break;
    }
    s.real_values.push_back(v);
    s.values.push_back(static_cast<std::int64_t>(std::ceil(v)));
  }
  // the spacing check needs N_{j+1}, so the last reported index is size-1
  s.j_max = std::int64_t(s.values.size()) - 1;
  s.j0 = s.j0_real = 1;
  for (std::int64_t j = 1; j <= s.j_max; ++j) {
    std::size_t i = std::size_t(j - 1);
    if (!s.spacing_ok(double(s.values[i]), double(s.values[i + 1]))) s.j0 = j + 1;
    if (!s.spacing_ok(s.real_values[i], s.real_values[i + 1])) s.j0_real = j + 1;
  }
  s.values.resize(std::size_t(std::max<std::int64_t>(s.j_max, 0)));
  s.real_values.resize(s.values.size());
  return s;
}

struct L1Report {
  double lhs = 0;
  double rhs = 0;
  double theta_norm = 0;
  std::vector<double> f_norms;
};

// L^q norm for the uniform probability measure; q = inf allowed.
inline double lq_norm(const FiniteObservable& f, double q) {
  if (!(q >= 1)) throw domain_error("lq_norm: q must be >= 1");
  if (std::isinf(q)) {
    double m = 0;
    for (const auto& v : f) m = std::max(m, std::abs(v));
    return m;
  }
  kahan_sum<double> s;
  for (const auto& v : f) s += std::pow(std::abs(v), q);
  return std::pow(s.value() / double(f.size()), 1.0 / q);
}

// ||(1/N) sum_n theta(n) prod_j f_j(g_{j,n} x)||_{L^1} against
// (E_n |theta|^r)^{1/r} prod_j ||f_j||_{q_j}, with 1/r + sum 1/q_j = 1.
// gs[j][n-1] is the permutation g_{j,n}.
inline L1Report l1_check(const FiniteSystem& sys, const ArithSeq& theta, const std::vector<FiniteObservable>& fs,
                         const std::vector<double>& q, const std::vector<std::vector<Perm>>& gs, std::int64_t N,
                         double r) {
  if (N < 1) throw domain_error("l1_check: N must be >= 1");
  if (fs.size() != q.size() || fs.size() != gs.size()) throw domain_error("l1_check: size mismatch");
  detail::check_finite_obs(sys, fs);
  double inv = std::isinf(r) ? 0.0 : 1.0 / r;
  if (!(r >= 1)) throw domain_error("l1_check: r must be >= 1");
  for (double qj : q) {
    if (!(qj >= 1)) throw domain_error("l1_check: q_j must be >= 1");
    inv += std::isinf(qj) ? 0.0 : 1.0 / qj;
  }
  if (std::abs(inv - 1.0) > 1e-12) throw domain_error("l1_check: exponents must satisfy 1/r + sum 1/q_j = 1");
  for (const auto& g : gs) {
    if (g.size() != std::size_t(N)) throw domain_error("l1_check: need one map per n");
    for (const auto& p : g) {
      if (p.size() != sys.size()) throw domain_error("l1_check: map on wrong space");
      std::vector<char> seen(p.size(), 0);
      for (auto y : p) {
        if (y >= p.size() || seen[y]) throw domain_error("l1_check: map is not measure-preserving");
        seen[y] = 1;
      }
    }
  }
  L1Report rep;
  std::size_t M = sys.size();
  std::vector<double> absval(M);
  for (std::uint32_t x = 0; x < M; ++x) {
    kahan_sum<cplx> acc;
    for (std::int64_t n = 1; n <= N; ++n) {
      cplx t = theta(n);
      for (std::size_t j = 0; j < fs.size(); ++j) t *= fs[j][gs[j][std::size_t(n - 1)][x]];
      acc += t;
    }
    absval[x] = std::abs(acc.value()) / double(N);
  }
  kahan_sum<double> l1;
  for (double v : absval) l1 += v;
  rep.lhs = l1.value() / double(M);
  if (std::isinf(r)) {
    for (std::int64_t n = 1; n <= N; ++n) rep.theta_norm = std::max(rep.theta_norm, std::abs(theta(n)));
  } else {
    kahan_sum<double> t;
    for (std::int64_t n = 1; n <= N; ++n) t += std::pow(std::abs(theta(n)), r);
    rep.theta_norm = std::pow(t.value() / double(N), 1.0 / r);
  }
  rep.rhs = rep.theta_norm;
  for (std::size_t j = 0; j < fs.size(); ++j) {
    rep.f_norms.push_back(lq_norm(fs[j], q[j]));
    rep.rhs *= rep.f_norms.back();
  }
  return rep;
}

// g_{j,n} = T_j^{P_j(n)} (or T_0 when the system has a single transformation).
inline std::vector<std::vector<Perm>> orbit_maps(const FiniteSystem& sys, const std::vector<IntPoly>& polys,
                                                 std::int64_t N) {
  if (N < 1) throw domain_error("orbit_maps: N must be >= 1");
  if (double(N) * double(polys.size()) * double(sys.size()) > 5e8) throw cost_error("orbit_maps: too large");
  std::vector<std::vector<Perm>> gs(polys.size(), std::vector<Perm>(std::size_t(N), Perm(sys.size())));
  for (std::size_t j = 0; j < polys.size(); ++j) {
    std::size_t t = sys.count() == 1 ? 0 : j;
    for (std::int64_t n = 1; n <= N; ++n)
      for (std::uint32_t x = 0; x < sys.size(); ++x)
        gs[j][std::size_t(n - 1)][x] = sys.poly_power(t, x, polys[j], n);
  }
  return gs;
}

struct SeriesRow {
  std::size_t point = 0;
  std::int64_t N = 0;
  cplx value;
};

// (log N)^A A_N(x) at every schedule entry N (sorted ascending), for every point,
// by a single running sum per point. Rows are ordered by point, then N.
template <class System, class Point, class Obs>
std::vector<SeriesRow> convergence_experiment(const System& sys, const std::vector<Point>& points,
                                              const ArithSeq& theta, const std::vector<IntPoly>& polys,
                                              const std::vector<Obs>& fs, std::vector<std::int64_t> schedule,
                                              double A = 0.0) {
  if (polys.size() != fs.size()) throw domain_error("convergence_experiment: need one observable per polynomial");
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
  if (schedule.empty()) return {};
  if (schedule.front() < 1) throw domain_error("convergence_experiment: schedule entries must be >= 1");
  for (auto Nj : schedule) detail::check_weight(Nj, A);
  std::int64_t Nmax = schedule.back();
  detail::check_theta(theta, Nmax);
  if (double(Nmax) * double(points.size()) * double(fs.size() + 1) > 4e10)
    throw cost_error("convergence_experiment: too much work");
  std::vector<SeriesRow> rows(points.size() * schedule.size());
  parallel_for(points.size(), [&](std::size_t pi) {
    const auto& x = points[pi];
    kahan_sum<cplx> acc;
    std::size_t next = 0;
    for (std::int64_t n = 1; n <= Nmax; ++n) {
      cplx t = theta(n);
      if (t != cplx{}) {
        for (std::size_t i = 0; i < fs.size(); ++i) {
          if constexpr (std::is_same_v<System, FiniteSystem>)
            t *= fs[i][sys.poly_power(0, x, polys[i], n)];
          else
            t *= fs[i](sys.power_wrapped(0, x, evaluate_wrap(polys[i], n)));
        }
        acc += t;
      }
      while (next < schedule.size() && schedule[next] == n) {
        rows[pi * schedule.size() + next] = {pi, n, detail::normalize(acc.value(), n, A)};
        ++next;
      }
    }
  });
  return rows;
}

// Running commuting averages (log N)^A (1/N) sum_{n<=N} theta(n) prod_j f_j(T_j^n x) at
// every schedule entry, rows ordered by point, then N.
inline std::vector<SeriesRow> commuting_series(const FiniteSystem& sys, const std::vector<std::uint32_t>& points,
                                               const ArithSeq& theta, const std::vector<FiniteObservable>& fs,
                                               std::vector<std::int64_t> schedule, double A = 0.0) {
  if (fs.size() != sys.count()) throw domain_error("commuting_series: need one observable per transformation");
  if (!sys.commute()) throw domain_error("commuting_series: transformations do not commute");
  detail::check_finite_obs(sys, fs);
  std::sort(schedule.begin(), schedule.end());
  schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
  if (schedule.empty()) return {};
  for (auto Nj : schedule) detail::check_weight(Nj, A);
  std::int64_t Nmax = schedule.back();
  if (double(Nmax) * double(points.size()) * double(fs.size() + 1) > 4e10)
    throw cost_error("commuting_series: too much work");
  for (auto x : points)
    if (x >= sys.size()) throw domain_error("commuting_series: point outside the system");
  std::vector<SeriesRow> rows(points.size() * schedule.size());
  parallel_for(points.size(), [&](std::size_t pi) {
    std::vector<std::uint32_t> y(fs.size(), points[pi]);
    kahan_sum<cplx> acc;
    std::size_t next = 0;
    for (std::int64_t n = 1; n <= Nmax; ++n) {
      cplx t = theta(n);
      for (std::size_t j = 0; j < fs.size(); ++j) {
        y[j] = sys.apply(j, y[j]);
        t *= fs[j][y[j]];
      }
      acc += t;
      while (next < schedule.size() && schedule[next] == n) {
        rows[pi * schedule.size() + next] = {pi, n, detail::normalize(acc.value(), n, A)};
        ++next;
      }
    }
  });
  return rows;
}

}  // namespace mergo
