#include <gtest/gtest.h>

#include <random>

#include "mergo/norms.hpp"

using namespace mergo;

namespace {

// sum over x, h_1..h_s of prod_omega C^{|omega|} f(x + omega.h), straight from the definition.
cplx box_bruteforce(const ArithSeq& f, int s) {
  std::int64_t lo = f.start(), hi = f.last();
  std::int64_t W = hi - lo;
  cplx total = 0;
  std::vector<std::int64_t> h(s);
  std::function<void(std::int64_t, int)> rec = [&](std::int64_t x, int j) {
    if (j == s) {
      cplx p = 1;
      for (int om = 0; om < (1 << s); ++om) {
        std::int64_t y = x;
        int w = 0;
        for (int b = 0; b < s; ++b) {
          if (om >> b & 1) y += h[b], ++w;
        }
        cplx v = f(y);
        p *= (w % 2) ? std::conj(v) : v;
      }
      total += p;
      return;
    }
    for (h[j] = -W; h[j] <= W; ++h[j]) rec(x, j + 1);
  };
  for (std::int64_t x = lo; x <= hi; ++x) rec(x, 0);
  return total;
}

ArithSeq random_complex(std::mt19937_64& rng, std::int64_t start, std::size_t len) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<cplx> v(len);
  for (auto& x : v) x = cplx(u(rng), u(rng));
  return ArithSeq(start, v);
}

ArithSeq unimodular(std::mt19937_64& rng, std::size_t len) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<cplx> v(len);
  for (auto& x : v) x = e(u(rng));
  return ArithSeq(1, v);
}

ArithSeq indicator(std::int64_t N) { return ArithSeq::integral(1, std::vector<std::int64_t>(N, 1)); }

}  // namespace

TEST(BoxNorm, SmallExamples) {
  EXPECT_NEAR(gowers_box_raw(indicator(2), 2), std::pow(6.0, 0.25), 1e-14);
  EXPECT_EQ(gowers_box_raw(ArithSeq::zeros(1, 10), 3), 0.0);
  EXPECT_NEAR(gowers_box_raw(indicator(17), 1), 17.0, 1e-12);
}

TEST(BoxNorm, RecursionMatchesDefinition) {
  std::mt19937_64 rng(1);
  for (int s = 1; s <= 3; ++s)
    for (int t = 0; t < 5; ++t) {
      auto f = random_complex(rng, -3 + int(rng() % 5), 3 + rng() % (s == 3 ? 6 : 12));
      cplx b = box_bruteforce(f, s);
      EXPECT_NEAR(b.imag(), 0.0, 1e-9);
      EXPECT_NEAR(gowers_box_power(f, s), b.real(), 1e-9 * std::max(1.0, std::abs(b)));
    }
}

TEST(BoxNorm, CostGuard) {
  EXPECT_THROW(gowers_box_raw(indicator(10), 5), cost_error);
  EXPECT_THROW(gowers_box_raw(indicator(10), 0), domain_error);
  EXPECT_THROW(gowers_box_raw(indicator(1000), 4, 1e6), cost_error);
  EXPECT_THROW(gowers_norm(indicator(64), 64, 9), cost_error);
}

TEST(GowersNorm, Normalization) {
  for (int s = 1; s <= 4; ++s) EXPECT_NEAR(gowers_norm(indicator(20), 20, s).value, 1.0, 1e-12);
}

TEST(GowersNorm, LinearPhaseHasUnitU2) {
  for (double a : {0.1, 0.37, 0.5}) {
    auto f = ArithSeq::tabulate(1, 40, [a](std::int64_t n) { return e(a * double(n)); });
    EXPECT_NEAR(gowers_norm(f, 40, 2).value, 1.0, 1e-12);
    EXPECT_NEAR(gowers_u2_fft(f, 40).value, 1.0, 1e-12);
  }
}

TEST(GowersNorm, MobiusNaiveMatchesFft) {
  auto mu = sieve_mobius(1000);
  double a = gowers_norm(mu, 1000, 2).value, b = gowers_u2_fft(mu, 1000).value;
  EXPECT_NEAR(a, b, 1e-9);
}

TEST(GowersNorm, FftMatchesNaiveOnRandomInputs) {
  std::mt19937_64 rng(2);
  for (std::int64_t N = 1; N <= 64; N += 7)
    for (int t = 0; t < 10; ++t) {
      auto f = random_complex(rng, 1, N);
      double a = gowers_norm(f, N, 2).value, b = gowers_u2_fft(f, N).value;
      EXPECT_NEAR(a, b, 1e-9 * a);
    }
}

TEST(GowersNorm, FftWindowAgreesWithBoxOnMobius) {
  auto mu = sieve_mobius(1 << 16);
  std::mt19937_64 rng(3);
  std::int64_t lo = 1 + rng() % ((1 << 16) - 64);
  auto w = mu.window(lo, lo + 63);
  EXPECT_NEAR(gowers_u2_power_fft(w), gowers_box_power(w, 2), 1e-9 * gowers_box_power(w, 2));
}

TEST(GowersNorm, IndicatorClosedForm) {
  for (std::int64_t N = 1; N <= 40; ++N) {
    double raw = gowers_u2_power_fft(indicator(N));
    EXPECT_NEAR(raw, double(2 * N * N * N + N) / 3.0, 1e-9 * raw);
  }
  EXPECT_NEAR(std::pow(gowers_u2_power_fft(indicator(2)), 0.25), std::pow(6.0, 0.25), 1e-14);
  EXPECT_EQ(gowers_u2_fft(ArithSeq::zeros(1, 8), 8).value, 0.0);
}

TEST(GowersNorm, MonotoneInS) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    std::int64_t N = 8 + rng() % 20;
    auto f = random_complex(rng, 1, N);
    double prev = 0;
    for (int s = 1; s <= 4; ++s) {
      double v = gowers_norm(f, N, s).value;
      EXPECT_LE(prev, v + 1e-9);
      prev = v;
    }
  }
}

TEST(GowersNorm, Homogeneity) {
  std::mt19937_64 rng(5);
  auto f = random_complex(rng, 1, 30);
  cplx c(0.3, -1.7);
  for (int s = 1; s <= 3; ++s)
    EXPECT_NEAR(gowers_norm(f.scaled(c), 30, s).value, std::abs(c) * gowers_norm(f, 30, s).value, 1e-9);
  EXPECT_NEAR(gowers_u2_fft(f.scaled(c), 30).value, std::abs(c) * gowers_u2_fft(f, 30).value, 1e-9);
  auto a = u_norm_search(f, 30, 2).first.value;
  auto b = u_norm_search(f.scaled(c), 30, 2).first.value;
  EXPECT_NEAR(b, std::abs(c) * a, 1e-9);
}

TEST(USearch, MatchedQuadraticPhase) {
  auto f = ArithSeq::tabulate(1, 256, [](std::int64_t n) { return e(frac_mul(0.3, n * n)); });
  auto [est, w] = u_norm_search(f, 256, 3);
  EXPECT_EQ(est.kind, NormEstimate::Kind::lower_bound);
  EXPECT_NEAR(est.value, 1.0, 1e-6);
  ASSERT_EQ(w.coefficients.size(), 2u);
  EXPECT_NEAR(w.coefficients[1], 0.3, 1.0 / (256.0 * 256.0));
  EXPECT_NEAR(phase_correlation(f, 256, w.coefficients), w.correlation, 1e-9);
}

TEST(USearch, ZeroInput) {
  auto [est, w] = u_norm_search(ArithSeq::zeros(1, 32), 32, 3);
  EXPECT_EQ(est.value, 0.0);
}

TEST(USearch, MobiusLinearAgainstFineGrid) {
  const std::int64_t N = 512;
  auto mu = sieve_mobius(N);
  auto [est, w] = u_norm_search(mu, N, 2);
  double best = 0;
  for (int k = 0; k < 8 * N; ++k) {
    double c[1] = {double(k) / (8.0 * N)};
    best = std::max(best, phase_correlation(mu, N, c));
  }
  EXPECT_GE(est.value, best - 1e-12);
  // the fine grid is within pi(N-1)/(16N) relative of the supremum
  EXPECT_LE(est.value, best / (1 - std::numbers::pi / 16) + 1e-12);
}

TEST(USearch, CoarsenedWhenOverBudget) {
  std::mt19937_64 rng(6);
  auto f = unimodular(rng, 64);
  USearchOptions o;
  o.budget = 1000;
  auto [est, w] = u_norm_search(f, 64, 4, o);
  EXPECT_TRUE(est.coarsened);
  EXPECT_NEAR(phase_correlation(f, 64, w.coefficients), est.value, 1e-12);
}

TEST(UCertified, Examples) {
  auto one = indicator(40);
  for (int s : {2, 3}) {
    auto [est, w] = u_norm_certified(one, 40, s, 1e-3);
    EXPECT_EQ(est.kind, NormEstimate::Kind::certified);
    EXPECT_NEAR(est.value, 1.0, 1e-3);
    for (double c : w.coefficients) EXPECT_NEAR(std::min(c, 1 - c), 0.0, 1e-9);
  }
  auto alt = ArithSeq::tabulate(1, 64, [](std::int64_t n) { return cplx(n % 2 ? -1.0 : 1.0); });
  auto [est, w] = u_norm_certified(alt, 64, 2, 1e-3);
  EXPECT_NEAR(est.value, 1.0, 1e-3);
  EXPECT_NEAR(w.coefficients[0], 0.5, 1e-9);
}

TEST(UCertified, BracketsSearchOnMobius) {
  auto mu = sieve_mobius(64);
  const double eps = 1e-3;
  auto [cert, cw] = u_norm_certified(mu, 64, 3, eps);
  auto [low, lw] = u_norm_search(mu, 64, 3);
  EXPECT_LE(low.value, cert.value + eps);
  EXPECT_NEAR(phase_correlation(mu, 64, cw.coefficients), cert.value, 1e-9);
}

TEST(UCertified, Refusals) {
  EXPECT_THROW(u_norm_certified(indicator(65), 65, 3, 1e-3), domain_error);
  EXPECT_THROW(u_norm_certified(indicator(10), 10, 4, 1e-3), domain_error);
  std::mt19937_64 rng(8);
  CertifyOptions o;
  o.max_evaluations = 100;
  EXPECT_THROW(u_norm_certified(unimodular(rng, 64), 64, 3, 1e-6, o), cost_error);
}

TEST(VanDerCorput, Examples) {
  auto z = vdc_bound(ArithSeq::zeros(1, 10), 10, 5);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  for (std::int64_t N : {1, 7, 32}) {
    auto r = vdc_bound(indicator(N), N, N);
    EXPECT_NEAR(r.lhs, 1.0, 1e-15);
    // sum_h (H-|h|)/H^2 (N-|h|)/N, independently summed
    double s = 0;
    for (std::int64_t h = -(N - 1); h <= N - 1; ++h) s += double(N - std::abs(h)) / double(N * N) * double(N - std::abs(h)) / double(N);
    EXPECT_NEAR(r.rhs, 2.0 * s, 1e-12);
    EXPECT_TRUE(r.holds());
  }
  EXPECT_THROW(vdc_bound(indicator(4), 4, 5), domain_error);
}

TEST(VanDerCorput, RandomSigns) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::int64_t> v(128);
    for (auto& x : v) x = rng() % 2 ? 1 : -1;
    ArithSeq f = ArithSeq::integral(1, v);
    for (std::int64_t H : {1, 8, 64}) ASSERT_TRUE(vdc_bound(f, 128, H).holds());
  }
}

TEST(GowersCauchySchwarz, EqualityCases) {
  std::mt19937_64 rng(10);
  for (int s : {2, 3}) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<cplx> v(12);
    for (auto& x : v) x = u(rng);
    ArithSeq real_f(0, v);
    auto r = gcs_check(std::vector<ArithSeq>(1u << s, real_f), s);
    EXPECT_NEAR(r.lhs, r.rhs, 1e-9 * r.rhs);
    EXPECT_NEAR(r.lhs, gowers_box_power(real_f, s), 1e-9 * r.rhs);
    auto f = random_complex(rng, 3, 10);
    std::vector<ArithSeq> fs;
    for (int om = 0; om < (1 << s); ++om) {
      if (__builtin_popcount(om) % 2 == 0) {
        fs.push_back(f);
      } else {
        std::vector<cplx> c(f.values().begin(), f.values().end());
        for (auto& x : c) x = std::conj(x);
        fs.emplace_back(f.start(), c);
      }
    }
    auto rc = gcs_check(fs, s);
    EXPECT_NEAR(rc.lhs, rc.rhs, 1e-9 * rc.rhs);
  }
}

TEST(GowersCauchySchwarz, ZeroFactor) {
  std::mt19937_64 rng(11);
  std::vector<ArithSeq> fs;
  for (int i = 0; i < 4; ++i) fs.push_back(random_complex(rng, 0, 8));
  fs[2] = ArithSeq::zeros(0, 7);
  auto r = gcs_check(fs, 2);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
}

TEST(GowersCauchySchwarz, RandomInputs) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 40; ++t) {
    int s = 2 + t % 2;
    std::vector<ArithSeq> fs;
    for (int i = 0; i < (1 << s); ++i) fs.push_back(random_complex(rng, int(rng() % 7) - 3, 1 + rng() % 16));
    ASSERT_TRUE(gcs_check(fs, s).holds());
  }
}

TEST(U2Inverse, Examples) {
  auto f = ArithSeq::tabulate(1, 128, [](std::int64_t n) { return e(0.2 * double(n)); });
  auto r = u2_inverse_witness(f, 128);
  EXPECT_NEAR(r.delta, 1.0, 1e-12);
  EXPECT_NEAR(r.correlation, 1.0, 1e-12);
  EXPECT_NEAR(r.alpha, 0.2, 1e-9);
  auto z = u2_inverse_witness(ArithSeq::zeros(1, 16), 16);
  EXPECT_EQ(z.delta, 0.0);
  EXPECT_EQ(z.correlation, 0.0);
  EXPECT_THROW(u2_inverse_witness(ArithSeq(1, {cplx(2.0)}), 1), domain_error);
}

TEST(U2Inverse, ConstantValue) { EXPECT_NEAR(kU2InverseConstant, std::sqrt(2.0 / 3.0) * (1 - std::numbers::pi / 8), 1e-15); }

TEST(Vinogradov, PropertyOne) {
  auto g = vinogradov_bump(-0.25, 0.25, 0.05, 200);
  EXPECT_EQ(g(0.0), 1.0);
  EXPECT_EQ(g(0.4), 0.0);
  EXPECT_NEAR(g.c(0).real(), 0.5 - 0.05, 1e-15);
  for (int i = 0; i <= 10000; ++i) {
    double x = -0.5 + double(i) / 10000.0;
    double v = g(x);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    if (x >= -0.25 + 0.05 && x <= 0.25 - 0.05) ASSERT_EQ(v, 1.0);
    if (x < -0.25 - 0.05 || x > 0.25 + 0.05) ASSERT_EQ(v, 0.0);
  }
}

TEST(Vinogradov, FourierSeriesConverges) {
  auto g = vinogradov_bump(-0.1, 0.3, 0.04, 2000);
  for (double x : {-0.45, -0.1, 0.0, 0.1, 0.27, 0.31, 0.49})
    EXPECT_NEAR(g.fourier(x), g(x), g.tail_bound(2000) + 1e-9) << x;
}

TEST(Vinogradov, CoefficientsMatchQuadrature) {
  auto g = vinogradov_bump(-0.3, 0.2, 0.08, 10);
  const int M = 200000;
  for (int j = -10; j <= 10; ++j) {
    cplx s = 0;
    for (int i = 0; i < M; ++i) {
      double x = -0.5 + (i + 0.5) / M;
      s += g(x) * e(-double(j) * x);
    }
    s /= double(M);
    EXPECT_NEAR(std::abs(s - g.c(j)), 0.0, 1e-8) << j;
  }
}

TEST(Vinogradov, TailAndEnvelope) {
  for (double eta : {0.01, 0.05, 0.1}) {
    auto g = vinogradov_bump(-0.25, 0.25, eta, 1000);
    for (int K : {10, 100}) EXPECT_LE(g.tail_bound(K), 10.0 / eta / K);
    EXPECT_TRUE(g.coefficient_envelope_holds());
  }
  // wide interval, small eta: |c_1| ~ 1/pi > 10 eta, reported
  auto g = vinogradov_bump(-0.25, 0.25, 0.01, 5);
  EXPECT_FALSE(g.large_coefficients().empty());
}

TEST(Vinogradov, DomainErrors) {
  EXPECT_THROW(vinogradov_bump(0.2, 0.1, 0.01, 5), domain_error);
  EXPECT_THROW(vinogradov_bump(-0.25, 0.25, 0.3, 5), domain_error);
  EXPECT_THROW(vinogradov_bump(-0.25, 0.25, 0.0, 5), domain_error);
  EXPECT_THROW(vinogradov_bump(-0.5, 0.25, 0.01, 5), domain_error);
}
