#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mergo/error.hpp"

namespace mergo {

namespace ring {

inline std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw overflow_error("integer overflow in polynomial arithmetic");
  return r;
}
inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw overflow_error("integer overflow in polynomial arithmetic");
  return r;
}
inline std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw overflow_error("integer overflow in polynomial arithmetic");
  return r;
}
inline bool is_zero(std::int64_t a) { return a == 0; }
inline std::string str(std::int64_t a) { return std::to_string(a); }

}  // namespace ring

// Polynomial in one variable over R (std::int64_t or another Poly), stored
// constant term first with trailing zeros stripped.
template <class R>
class Poly {
 public:
  using coeff_type = R;

  Poly() = default;
  explicit Poly(std::vector<R> c) : c_(std::move(c)) { normalize(); }
  explicit Poly(std::int64_t a) : Poly(std::vector<R>{R(a)}) {}
  static Poly constant(R a) { return Poly(std::vector<R>{std::move(a)}); }
  static Poly monomial(R a, int k) {
    std::vector<R> c(static_cast<std::size_t>(k + 1), R{});
    c[static_cast<std::size_t>(k)] = std::move(a);
    return Poly(std::move(c));
  }
  static Poly variable() { return monomial(R(1), 1); }

  bool is_zero() const { return c_.empty(); }
  // -1 for the zero polynomial
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const R& lead() const { return c_.back(); }
  const std::vector<R>& coefficients() const { return c_; }
  R coeff(int i) const { return i >= 0 && i < static_cast<int>(c_.size()) ? c_[static_cast<std::size_t>(i)] : R{}; }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<R> c(std::max(a.c_.size(), b.c_.size()), R{});
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = ring_add(a.coeff(int(i)), b.coeff(int(i)));
    return Poly(std::move(c));
  }
  friend Poly operator-(const Poly& a, const Poly& b) {
    std::vector<R> c(std::max(a.c_.size(), b.c_.size()), R{});
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = ring_sub(a.coeff(int(i)), b.coeff(int(i)));
    return Poly(std::move(c));
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    std::vector<R> c(a.c_.size() + b.c_.size() - 1, R{});
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] = ring_add(c[i + j], ring_mul(a.c_[i], b.c_[j]));
    return Poly(std::move(c));
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
  // Degree first (zero counts as a constant), then coefficients from the
  // leading one down. Constants compare as integers.
  friend bool operator<(const Poly& a, const Poly& b) {
    int da = std::max(a.degree(), 0), db = std::max(b.degree(), 0);
    if (da != db) return da < db;
    for (int i = da; i >= 0; --i) {
      R x = a.coeff(i), y = b.coeff(i);
      if (x < y) return true;
      if (y < x) return false;
    }
    return false;
  }
  // Q with its y-independent term removed.
  Poly nonconstant_part() const {
    if (c_.empty()) return Poly();
    std::vector<R> c = c_;
    c[0] = R{};
    return Poly(std::move(c));
  }

  // Q(y + h)
  Poly shifted(const R& h) const {
    Poly lin(std::vector<R>{h, R(1)});
    Poly out;
    for (std::size_t i = c_.size(); i-- > 0;) out = out * lin + constant(c_[i]);
    return out;
  }

  std::string str(const std::string& var = "y", const std::string& inner = "h") const {
    if (c_.empty()) return "0";
    std::string out;
    for (std::size_t i = c_.size(); i-- > 0;) {
      if (ring_is_zero(c_[i])) continue;
      std::string cs = ring_str(c_[i], inner);
      bool compound = cs.find_first_of("+-", 1) != std::string::npos;
      bool neg = !compound && cs[0] == '-';
      if (neg) cs = cs.substr(1);
      if (compound) cs = "(" + cs + ")";
      if (!out.empty()) out += neg ? " - " : " + ";
      else if (neg) out += "-";
      std::string mono = i == 0 ? "" : i == 1 ? var : var + "^" + std::to_string(i);
      if (i == 0) out += cs;
      else if (cs == "1") out += mono;
      else out += cs + (compound ? "" : "*") + mono;
    }
    return out;
  }

 private:
  void normalize() {
    while (!c_.empty() && ring_is_zero(c_.back())) c_.pop_back();
  }

  static R ring_add(const R& a, const R& b) {
    if constexpr (std::is_same_v<R, std::int64_t>) return ring::add(a, b);
    else return a + b;
  }
  static R ring_sub(const R& a, const R& b) {
    if constexpr (std::is_same_v<R, std::int64_t>) return ring::sub(a, b);
    else return a - b;
  }
  static R ring_mul(const R& a, const R& b) {
    if constexpr (std::is_same_v<R, std::int64_t>) return ring::mul(a, b);
    else return a * b;
  }
  static bool ring_is_zero(const R& a) {
    if constexpr (std::is_same_v<R, std::int64_t>) return a == 0;
    else return a.is_zero();
  }
  static std::string ring_str(const R& a, const std::string& inner) {
    if constexpr (std::is_same_v<R, std::int64_t>) return std::to_string(a);
    else return a.str(inner);
  }

  std::vector<R> c_;
};

using IntPoly = Poly<std::int64_t>;
// Polynomials in y whose coefficients are integer polynomials in h.
using SymPoly = Poly<IntPoly>;

inline SymPoly lift(const IntPoly& p) {
  std::vector<IntPoly> c;
  for (std::int64_t a : p.coefficients()) c.push_back(IntPoly::constant(a));
  return SymPoly(std::move(c));
}

inline const IntPoly& symbolic_h() {
  static const IntPoly h = IntPoly::variable();
  return h;
}

// Q(n) with overflow-checked arithmetic.
inline std::int64_t evaluate(const IntPoly& p, std::int64_t n) {
  std::int64_t r = 0;
  const auto& c = p.coefficients();
  for (std::size_t i = c.size(); i-- > 0;) r = ring::add(ring::mul(r, n), c[i]);
  return r;
}

// Q(n) mod M in [0, M).
inline std::int64_t evaluate_mod(const IntPoly& p, std::int64_t n, std::int64_t M) {
  if (M <= 0) throw domain_error("evaluate_mod: modulus must be positive");
  auto md = [M](__int128 x) { return static_cast<std::int64_t>(((x % M) + M) % M); };
  std::int64_t nm = md(n), r = 0;
  const auto& c = p.coefficients();
  for (std::size_t i = c.size(); i-- > 0;) r = md(static_cast<__int128>(r) * nm + md(c[i]));
  return r;
}

inline IntPoly derivative(const IntPoly& p) {
  std::vector<std::int64_t> c;
  for (std::size_t i = 1; i < p.coefficients().size(); ++i)
    c.push_back(ring::mul(static_cast<std::int64_t>(i), p.coefficients()[i]));
  return IntPoly(std::move(c));
}

// Parses expressions such as "2y^3 - y + 1", "y*5", "-3". Variable: y.
inline IntPoly parse_poly(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw domain_error("parse_poly: empty polynomial");
  std::vector<std::int64_t> c;
  auto put = [&c](int k, std::int64_t a) {
    if (c.size() <= static_cast<std::size_t>(k)) c.resize(static_cast<std::size_t>(k + 1), 0);
    c[static_cast<std::size_t>(k)] = ring::add(c[static_cast<std::size_t>(k)], a);
  };
  std::size_t i = 0;
  auto bad = [&]() { return domain_error("parse_poly: cannot parse '" + text + "'"); };
  auto read_int = [&](std::int64_t& v) {
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j == i) return false;
    try {
      v = std::stoll(s.substr(i, j - i));
    } catch (...) {
      throw overflow_error("parse_poly: coefficient out of range");
    }
    i = j;
    return true;
  };
  while (i < s.size()) {
    std::int64_t sign = 1;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    } else if (i != 0) {
      throw bad();
    }
    std::int64_t coef = 1;
    bool have = read_int(coef);
    if (i < s.size() && s[i] == '*') {
      if (!have) throw bad();
      ++i;
    }
    int k = 0;
    if (i < s.size() && s[i] == 'y') {
      ++i;
      k = 1;
      if (i < s.size() && s[i] == '^') {
        ++i;
        std::int64_t e;
        if (!read_int(e) || e > 64) throw bad();
        k = static_cast<int>(e);
      }
      if (i < s.size() && s[i] == '*') {
        ++i;
        std::int64_t c2;
        if (have || !read_int(c2)) throw bad();
        coef = c2;
        have = true;
      }
    } else if (!have) {
      throw bad();
    }
    put(k, ring::mul(sign, coef));
  }
  return IntPoly(std::move(c));
}

// Finite family with duplicates removed; first occurrence order is kept.
template <class R>
class PolyFamily {
 public:
  PolyFamily() = default;
  explicit PolyFamily(const std::vector<Poly<R>>& ps) {
    for (const auto& p : ps) add(p);
  }
  void add(const Poly<R>& p) {
    if (std::find(members_.begin(), members_.end(), p) == members_.end()) members_.push_back(p);
  }
  const std::vector<Poly<R>>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int degree() const {
    int d = 0;
    for (const auto& p : members_) d = std::max(d, p.degree());
    return d;
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (const auto& p : members_) out.push_back(p.str());
    return out;
  }

 private:
  std::vector<Poly<R>> members_;
};

using IntFamily = PolyFamily<std::int64_t>;
using SymFamily = PolyFamily<IntPoly>;

inline IntFamily parse_family(const std::string& text) {
  std::vector<IntPoly> ps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) ps.push_back(parse_poly(item));
  if (ps.empty()) throw domain_error("parse_family: no polynomials");
  return IntFamily(ps);
}

inline SymFamily lift(const IntFamily& F) {
  SymFamily out;
  for (const auto& p : F.members()) out.add(lift(p));
  return out;
}

// (d; w_d, ..., w_1). w[0] is w_d.
struct TypeVector {
  int d = 0;
  std::vector<int> w;
  friend bool operator==(const TypeVector&, const TypeVector&) = default;
  std::string str() const {
    std::string s = "(" + std::to_string(d) + ";";
    for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
    return s + ")";
  }
};

template <class R>
TypeVector type_of(const PolyFamily<R>& F) {
  if (F.empty()) throw domain_error("type_of: empty family");
  TypeVector t;
  t.d = F.degree();
  for (int j = t.d; j >= 1; --j) {
    std::vector<R> leads;
    for (const auto& p : F.members())
      if (p.degree() == j && std::find(leads.begin(), leads.end(), p.lead()) == leads.end()) leads.push_back(p.lead());
    t.w.push_back(static_cast<int>(leads.size()));
  }
  return t;
}

// Strict lexicographic order on (d, w_d, ..., w_1); a smaller d is smaller.
inline bool type_lt(const TypeVector& a, const TypeVector& b) {
  if (a.d != b.d) return a.d < b.d;
  for (std::size_t i = 0; i < std::max(a.w.size(), b.w.size()); ++i) {
    int x = i < a.w.size() ? a.w[i] : 0, y = i < b.w.size() ? b.w[i] : 0;
    if (x != y) return x < y;
  }
  return false;
}

// Member of least positive degree; ties go to the lexicographically smallest
// coefficient vector read from the leading coefficient down.
template <class R>
const Poly<R>& choose_q1(const PolyFamily<R>& F) {
  const Poly<R>* best = nullptr;
  for (const auto& p : F.members()) {
    if (p.degree() < 1) continue;
    if (!best || p.degree() < best->degree() || (p.degree() == best->degree() && p < *best)) best = &p;
  }
  if (!best) throw domain_error("vdc_step: family has no member of positive degree");
  return *best;
}

// One van der Corput step: {Q_j(y+h) - Q_1(y), Q_j(y) - Q_1(y)} over the
// nonconstant members Q_j. Constant members depend on the base variable only;
// Cauchy-Schwarz removes them before differencing, so they are dropped.
template <class R>
PolyFamily<R> vdc_step(const PolyFamily<R>& F, const R& h) {
  const Poly<R> q1 = choose_q1(F);
  PolyFamily<R> out;
  for (const auto& q : F.members()) {
    if (q.degree() < 1) continue;
    out.add(q.shifted(h) - q1);
    out.add(q - q1);
  }
  return out;
}

inline SymFamily vdc_step_symbolic(const IntFamily& F) { return vdc_step(lift(F), symbolic_h()); }

struct PETStep {
  std::vector<std::string> family;
  std::string q1;
  std::string h_mode;
  std::vector<std::string> result;
  TypeVector type_before;
  TypeVector type_after;
};

struct PETTrace {
  std::vector<PETStep> steps;
  int base_k = 0;
  int final_s = 0;
  std::string rule;
};

inline constexpr int kMaxPetSteps = 64;

inline const char* kPetCountingRule =
    "members differing by a y-independent term are merged; constant members are removed before each step; "
    "s = steps + base k, k = distinct linear leading coefficients + 1 if a constant member is present at the base";

// Members differing by a term independent of y act through one combined
// function, so each such class keeps its representative with zero constant
// term. Leading coefficients, hence types and the choice of Q_1 up to a
// translate, are unchanged.
template <class R>
PolyFamily<R> merge_translates(const PolyFamily<R>& F) {
  PolyFamily<R> out;
  for (const auto& p : F.members())
    if (p.degree() >= 1) out.add(p.nonconstant_part());
  return out;
}

// Gowers exponent from PET induction. Steps run until every member has degree
// <= 1. The base family is handled by the arithmetic-progression estimate with
// k = (number of distinct linear leading coefficients) + (1 if a constant member
// is present): members sharing a linear coefficient combine into one function of
// m + a n, constants into one function of m. Each step adds one to the exponent.
template <class R>
std::pair<int, PETTrace> required_s_generic(const PolyFamily<R>& input, const R& h, const std::string& h_mode,
                                            int guard) {
  if (input.empty()) throw domain_error("required_s: empty family");
  if (input.degree() < 1) throw domain_error("required_s: family has no member of positive degree");
  PETTrace tr;
  tr.rule = kPetCountingRule;
  bool has_const = false;
  for (const auto& p : input.members()) has_const |= p.degree() < 1;
  PolyFamily<R> F = merge_translates(input);
  while (F.degree() > 1) {
    if (static_cast<int>(tr.steps.size()) >= guard)
      throw cost_error("required_s: step guard of " + std::to_string(guard) + " reached");
    PETStep st;
    st.family = F.strings();
    st.q1 = choose_q1(F).str();
    st.h_mode = h_mode;
    st.type_before = type_of(F);
    PolyFamily<R> G = vdc_step(F, h);
    for (const auto& p : G.members()) has_const |= p.degree() < 1;
    F = merge_translates(G);
    st.result = F.strings();
    st.type_after = type_of(G);
    if (!type_lt(st.type_after, st.type_before)) throw std::logic_error("required_s: type did not decrease");
    tr.steps.push_back(std::move(st));
  }
  tr.base_k = static_cast<int>(F.size()) + (has_const ? 1 : 0);
  tr.final_s = tr.base_k + static_cast<int>(tr.steps.size());
  return {tr.final_s, tr};
}

// Symbolic h when `h` is empty, otherwise the integer h at every step.
inline std::pair<int, PETTrace> required_s(const IntFamily& F, std::optional<std::int64_t> h = std::nullopt,
                                           int guard = kMaxPetSteps) {
  if (h) return required_s_generic(F, *h, std::to_string(*h), guard);
  return required_s_generic(lift(F), symbolic_h(), "symbolic", guard);
}

namespace detail {

// Polynomial in (y, h) of total degree <= D; a[i][k] multiplies y^i h^k.
// Symbolic steps preserve total degree, so D = deg F suffices.
template <int D>
struct BiPoly {
  using Row = std::array<std::int64_t, D + 1>;
  std::array<Row, D + 1> a{};
  int yd = -1;
  int ydeg() const { return yd; }
  void fix() {
    yd = -1;
    for (int i = D; i >= 0 && yd < 0; --i)
      for (int k = 0; k <= D; ++k)
        if (a[i][k]) {
          yd = i;
          break;
        }
  }
  friend bool operator==(const BiPoly&, const BiPoly&) = default;
};

template <int D>
int row_deg(const typename BiPoly<D>::Row& r) {
  for (int k = D; k >= 0; --k)
    if (r[k]) return k;
  return -1;
}

// Same order as Poly<IntPoly>::operator<.
template <int D>
int row_cmp(const typename BiPoly<D>::Row& x, const typename BiPoly<D>::Row& y) {
  int dx = std::max(row_deg<D>(x), 0), dy = std::max(row_deg<D>(y), 0);
  if (dx != dy) return dx < dy ? -1 : 1;
  for (int k = dx; k >= 0; --k)
    if (x[k] != y[k]) return x[k] < y[k] ? -1 : 1;
  return 0;
}

template <int D>
int bi_cmp(const BiPoly<D>& p, const BiPoly<D>& q) {
  int dp = std::max(p.ydeg(), 0), dq = std::max(q.ydeg(), 0);
  if (dp != dq) return dp < dq ? -1 : 1;
  for (int i = dp; i >= 0; --i)
    if (int c = row_cmp<D>(p.a[i], q.a[i])) return c;
  return 0;
}

template <int D>
BiPoly<D> bi_shift_minus(const BiPoly<D>& p, const BiPoly<D>& q1, bool shift) {
  static constexpr auto binom = [] {
    std::array<std::array<std::int64_t, D + 1>, D + 1> b{};
    for (int n = 0; n <= D; ++n) {
      b[n][0] = 1;
      for (int r = 1; r <= n; ++r) b[n][r] = b[n - 1][r - 1] + (r <= n - 1 ? b[n - 1][r] : 0);
    }
    return b;
  }();
  BiPoly<D> out;
  if (!shift) {
    out = p;
  } else {
    for (int j = 0; j <= D; ++j)
      for (int k = 0; j + k <= D; ++k) {
        if (!p.a[j][k]) continue;
        for (int i = 0; i <= j; ++i)
          out.a[i][k + j - i] = ring::add(out.a[i][k + j - i], ring::mul(binom[j][i], p.a[j][k]));
      }
  }
  for (int i = 0; i <= D; ++i)
    for (int k = 0; k <= D; ++k) out.a[i][k] = ring::sub(out.a[i][k], q1.a[i][k]);
  out.fix();
  return out;
}

// Drops y-independent terms, sorts and dedups; returns true when a constant was seen.
template <int D>
bool bi_merge(std::vector<BiPoly<D>>& v) {
  bool had_const = false;
  std::size_t w = 0;
  for (auto& p : v) {
    p.a[0] = {};
    if (p.yd < 1) p.fix();
    if (p.ydeg() < 1) {
      had_const = true;
      continue;
    }
    v[w++] = p;
  }
  v.resize(w);
  std::sort(v.begin(), v.end(), [](const BiPoly<D>& x, const BiPoly<D>& y) { return bi_cmp<D>(x, y) < 0; });
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return had_const;
}

// Type of a merged sorted family; members sharing a leading coefficient are adjacent.
template <int D>
TypeVector bi_type(const std::vector<BiPoly<D>>& v) {
  TypeVector t;
  t.d = v.empty() ? 0 : std::max(0, v.back().ydeg());
  t.w.assign(static_cast<std::size_t>(t.d), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    int j = v[i].ydeg();
    if (j < 1) continue;
    if (i == 0 || v[i - 1].ydeg() != j || row_cmp<D>(v[i - 1].a[j], v[i].a[j]) != 0)
      ++t.w[static_cast<std::size_t>(t.d - j)];
  }
  return t;
}

}  // namespace detail

struct PETProfile {
  int steps = 0;
  int base_k = 0;
  int s = 0;
  bool descended = true;
  bool capped = false;
  std::size_t max_family = 0;
};

// required_s with symbolic h on fixed-size storage; no trace.
template <int D>
PETProfile pet_profile(const std::vector<std::vector<std::int64_t>>& members, int step_cap) {
  using B = detail::BiPoly<D>;
  std::vector<B> F;
  bool positive = false;
  for (const auto& c : members) {
    if (static_cast<int>(c.size()) > D + 1) throw domain_error("pet_profile: degree exceeds engine bound");
    B b;
    for (std::size_t i = 0; i < c.size(); ++i) b.a[i][0] = c[i];
    b.fix();
    positive |= b.ydeg() >= 1;
    F.push_back(b);
  }
  if (!positive) throw domain_error("pet_profile: family has no member of positive degree");
  PETProfile pr;
  bool has_const = detail::bi_merge<D>(F);
  std::vector<B> G;
  while (F.back().ydeg() > 1) {
    if (pr.steps >= step_cap) {
      pr.capped = true;
      return pr;
    }
    TypeVector before = detail::bi_type<D>(F);
    const B q1 = F.front();
    G.clear();
    for (const auto& q : F) {
      G.push_back(detail::bi_shift_minus<D>(q, q1, true));
      G.push_back(detail::bi_shift_minus<D>(q, q1, false));
    }
    has_const |= detail::bi_merge<D>(G);
    std::swap(F, G);
    pr.descended &= type_lt(detail::bi_type<D>(F), before);
    pr.max_family = std::max(pr.max_family, F.size());
    ++pr.steps;
  }
  pr.base_k = static_cast<int>(F.size()) + (has_const ? 1 : 0);
  pr.s = pr.steps + pr.base_k;
  return pr;
}

struct PetSweepReport {
  int max_size = 0, max_degree = 0, coef_bound = 0, guard = 0;
  std::int64_t families = 0;          // families with a positive-degree member
  std::int64_t descent_failures = 0;  // one symbolic step failed to lower the type
  std::int64_t classes = 0;           // families up to translates of members
  std::int64_t classes_checked = 0;   // classes run to termination or past the guard
  std::int64_t over_guard = 0;        // classes needing more steps than the guard
  int max_steps = 0;                  // over terminated classes
  int max_s = 0;
  std::string first_over_guard;
  bool complete = true;  // false when termination stopped at the first counterexample
};

namespace detail {

inline std::vector<std::vector<std::int64_t>> coefficient_box(int deg, int c, bool nonconstant_only) {
  std::vector<std::vector<std::int64_t>> out;
  std::int64_t base = 2 * c + 1, total = 1;
  for (int i = 0; i <= deg; ++i) total *= base;
  for (std::int64_t x = 0; x < total; ++x) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(deg + 1));
    std::int64_t y = x;
    for (auto& a : v) {
      a = y % base - c;
      y /= base;
    }
    if (nonconstant_only) {
      if (v[0] != 0) continue;
      if (std::all_of(v.begin(), v.end(), [](std::int64_t a) { return a == 0; })) continue;
    }
    out.push_back(v);
  }
  return out;
}

inline std::string family_string(const std::vector<std::vector<std::int64_t>>& fam) {
  std::string s;
  for (const auto& c : fam) s += (s.empty() ? "" : ", ") + IntPoly(c).str();
  return s;
}

// Enumerates subsets {i_1 < ... < i_r} of [0, n) with 1 <= r <= max_size.
template <class F>
void for_each_subset(std::size_t n, int max_size, F&& fn) {
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (!idx.empty()) fn(idx);
    if (static_cast<int>(idx.size()) == max_size) return;
    for (std::size_t i = start; i < n; ++i) {
      idx.push_back(i);
      rec(i + 1);
      idx.pop_back();
    }
  };
  rec(0);
}

template <int D>
void pet_sweep_impl(PetSweepReport& r, bool stop_on_counterexample) {
  using B = BiPoly<D>;
  // One symbolic step on every family in the box.
  auto box = coefficient_box(D, r.coef_bound, false);
  std::vector<B> polys;
  for (const auto& c : box) {
    B b;
    for (std::size_t i = 0; i < c.size(); ++i) b.a[i][0] = c[i];
    b.fix();
    polys.push_back(b);
  }
  std::vector<B> F, G;
  for_each_subset(polys.size(), r.max_size, [&](const std::vector<std::size_t>& idx) {
    F.clear();
    for (std::size_t i : idx) F.push_back(polys[i]);
    bi_merge<D>(F);
    if (F.empty()) return;
    ++r.families;
    const B q1 = F.front();
    G.clear();
    for (const auto& q : F) {
      G.push_back(bi_shift_minus<D>(q, q1, true));
      G.push_back(bi_shift_minus<D>(q, q1, false));
    }
    bi_merge<D>(G);
    if (!type_lt(bi_type<D>(G), bi_type<D>(F))) ++r.descent_failures;
  });
  // Full descent, cut at guard + 1 steps, on each family up to translates of members.
  auto classes = coefficient_box(D, r.coef_bound, true);
  std::int64_t n = 0;
  for (int k = 1; k <= r.max_size; ++k) {
    std::int64_t c = 1;
    for (int i = 0; i < k; ++i) c = c * std::int64_t(classes.size() - std::size_t(i)) / (i + 1);
    n += c;
  }
  r.classes = n;
  std::vector<std::vector<std::int64_t>> fam;
  bool stop = false;
  for_each_subset(classes.size(), r.max_size, [&](const std::vector<std::size_t>& idx) {
    if (stop) return;
    fam.clear();
    for (std::size_t i : idx) fam.push_back(classes[i]);
    ++r.classes_checked;
    PETProfile p = pet_profile<D>(fam, r.guard + 1);
    if (!p.descended) ++r.descent_failures;
    if (p.capped) {
      if (!r.over_guard++) r.first_over_guard = family_string(fam);
      if (stop_on_counterexample) {
        stop = true;
        r.complete = r.classes_checked == r.classes;
      }
      return;
    }
    r.max_steps = std::max(r.max_steps, p.steps);
    r.max_s = std::max(r.max_s, p.s);
  });
}

}  // namespace detail

// Exhaustive check over families of at most max_size distinct polynomials of
// degree <= max_degree with coefficients in [-coef, coef]. Every family gets
// one symbolic step. Full descents run once per family up to translates of
// members, which leave every type in the descent unchanged, and are cut one
// step past the guard.
inline PetSweepReport pet_sweep(int max_size, int max_degree, int coef, int guard = kMaxPetSteps,
                                bool stop_on_counterexample = true) {
  if (max_size < 1 || max_degree < 1 || max_degree > 4 || coef < 0)
    throw domain_error("pet_sweep: need size >= 1, 1 <= degree <= 4, coef >= 0");
  PetSweepReport r;
  r.max_size = max_size;
  r.max_degree = max_degree;
  r.coef_bound = coef;
  r.guard = guard;
  switch (max_degree) {
    case 1: detail::pet_sweep_impl<1>(r, stop_on_counterexample); break;
    case 2: detail::pet_sweep_impl<2>(r, stop_on_counterexample); break;
    case 3: detail::pet_sweep_impl<3>(r, stop_on_counterexample); break;
    default: detail::pet_sweep_impl<4>(r, stop_on_counterexample); break;
  }
  return r;
}

// Smallest C with |Q(n)| <= C N^d for all Q in F, n in [1, N], d = deg F.
inline double range_constant(const IntFamily& F, std::int64_t N) {
  if (F.empty()) throw domain_error("range_constant: empty family");
  if (N < 1) throw domain_error("range_constant: N must be >= 1");
  const int d = F.degree();
  std::int64_t best = 0;
  auto consider = [&](const IntPoly& p, std::int64_t n) {
    if (n < 1 || n > N) return;
    std::int64_t v = evaluate(p, n);
    if (v == INT64_MIN) throw overflow_error("range_constant: value out of range");
    best = std::max(best, v < 0 ? -v : v);
  };
  for (const auto& p : F.members()) {
    if (N <= 1'000'000) {
      for (std::int64_t n = 1; n <= N; ++n) consider(p, n);
      continue;
    }
    // |p| on integers is maximal at an endpoint or next to a critical point
    consider(p, 1);
    consider(p, N);
    IntPoly dp = derivative(p);
    std::vector<long double> roots;
    // real roots of dp in (1, N) by recursive isolation between critical points of dp
    std::function<std::vector<long double>(const IntPoly&)> real_roots = [&](const IntPoly& q) -> std::vector<long double> {
      std::vector<long double> out;
      if (q.degree() < 1) return out;
      long double lo = 1, hi = static_cast<long double>(N);
      std::vector<long double> pts = {lo};
      for (long double r : real_roots(derivative(q))) pts.push_back(r);
      pts.push_back(hi);
      auto ev = [&q](long double x) {
        long double r = 0;
        const auto& c = q.coefficients();
        for (std::size_t i = c.size(); i-- > 0;) r = r * x + static_cast<long double>(c[i]);
        return r;
      };
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        long double a = pts[i], b = pts[i + 1];
        long double fa = ev(a), fb = ev(b);
        if (fa == 0) out.push_back(a);
        if ((fa < 0) == (fb < 0) || fb == 0) continue;
        for (int it = 0; it < 200; ++it) {
          long double m = (a + b) / 2;
          if ((ev(m) < 0) == (fa < 0)) a = m;
          else b = m;
        }
        out.push_back((a + b) / 2);
      }
      return out;
    };
    for (long double r : real_roots(dp)) {
      auto fl = static_cast<std::int64_t>(std::floor(r));
      for (std::int64_t n = fl - 1; n <= fl + 2; ++n) consider(p, n);
    }
  }
  long double Nd = std::pow(static_cast<long double>(N), d);
  return static_cast<double>(static_cast<long double>(best) / Nd);
}

}  // namespace mergo
