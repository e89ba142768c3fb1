#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace mergo {

// e(x) = exp(2 pi i x), argument reduced mod 1 first.
inline std::complex<double> e(double x) {
  double r = x - std::nearbyint(x);
  double s, c;
  ::sincos(2.0 * std::numbers::pi * r, &s, &c);
  return {c, s};
}

// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
struct dd {
  double hi = 0.0;
  double lo = 0.0;
};

inline dd two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline dd two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

// Fractional part of x in [0, 1) for a double-double value.
inline double frac(dd x) {
  double fh = std::floor(x.hi);
  dd r = two_sum(x.hi - fh, x.lo);
  double f = r.hi + r.lo;
  f -= std::floor(f);
  return f >= 1.0 ? 0.0 : f;
}

// frac(c * m) without the catastrophic loss of a plain product: the product
// is carried in double-double and the integer part is removed before rounding.
inline double frac_mul(double c, std::int64_t m) {
  // split m so each half is exactly representable
  std::int64_t mh = m >> 26 << 26;
  std::int64_t ml = m - mh;
  dd a = two_prod(c, static_cast<double>(mh));
  dd b = two_prod(c, static_cast<double>(ml));
  double ia = std::floor(a.hi);
  double ib = std::floor(b.hi);
  dd s = two_sum(a.hi - ia, b.hi - ib);
  s.lo += (a.lo - std::floor(a.lo)) + (b.lo - std::floor(b.lo));
  return frac(s);
}

// frac(x * m) where x is itself a double-double (torus rotations).
inline double frac_mul(dd x, std::int64_t m) {
  double f1 = frac_mul(x.hi, m);
  double f2 = frac_mul(x.lo, m);
  dd s = two_sum(f1, f2);
  return frac(s);
}

}  // namespace mergo
