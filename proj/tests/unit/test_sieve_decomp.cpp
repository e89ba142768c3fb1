#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mergo/sieve_decomp.hpp"

using namespace mergo;

namespace {

std::vector<std::uint64_t> trial_factor_primes(std::uint64_t n) {
  std::vector<std::uint64_t> ps;
  for (std::uint64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      ps.push_back(p);
      while (n % p == 0) n /= p;
    }
  if (n > 1) ps.push_back(n);
  return ps;
}

int mobius_trial(std::uint64_t n) {
  int s = 1;
  for (std::uint64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      n /= p;
      if (n % p == 0) return 0;
      s = -s;
    }
  return n > 1 ? -s : s;
}

}  // namespace

TEST(Window, SmallArguments) {
  for (std::uint64_t n : {1, 2}) {
    auto w = window(n);
    EXPECT_EQ(w.lo, 1.0);
    EXPECT_EQ(w.hi, 1.0);
    EXPECT_TRUE(w.empty());
  }
}

TEST(Window, DoubleExponentialPoint) {
  EXPECT_NEAR(window_real(std::exp(std::exp(2.0))).lo, std::exp(4.0), 1e-12);
  // the integer ceiling sits slightly above e^{e^2}
  EXPECT_NEAR(window(1619).lo, 54.613162107545804, 1e-9);
}

TEST(Window, Thresholds) {
  auto [a, b] = window_thresholds();
  EXPECT_NEAR(std::pow(a, 4), std::exp(a), 1e-9);
  EXPECT_NEAR(std::pow(b, 4), std::exp(b), 1e-6);
  EXPECT_NEAR(a, 1.4296, 1e-4);
  EXPECT_NEAR(b, 8.6131, 1e-4);
  EXPECT_EQ(window_initial_end(), 65u);
  for (std::uint64_t n = 66; n <= 1'000'000; n = n * 3 / 2) EXPECT_TRUE(window(n).empty()) << n;
  auto above = window_log(std::exp(b + 0.01)), below = window_log(std::exp(b - 0.01));
  EXPECT_LT(above.first, above.second);
  EXPECT_GT(below.first, below.second);
}

TEST(Restrict, Examples) {
  auto mu = sieve_mobius(100);
  auto t = restrict(mu);
  EXPECT_EQ(t(10), mu(10));  // 2 * 5 with 5 in (2.005, 27.39)
  EXPECT_NE(t(10), cplx{});
  for (std::int64_t p : {67, 71, 97}) EXPECT_EQ(t(p), cplx{});
  for (std::int64_t n = 66; n <= 100; ++n) EXPECT_EQ(t(n), cplx{});
}

TEST(Restrict, MatchesTrialDivision) {
  const std::uint64_t N = 100000;
  auto mu = sieve_mobius(N);
  auto t = restrict(mu);
  std::int64_t dist = 0, oracle = 0;
  for (std::uint64_t n = 1; n <= N; ++n) {
    dist += std::llabs(*mu.exact_at(std::int64_t(n)) - *t.exact_at(std::int64_t(n)));
    bool hit = false;
    if (n >= 3) {
      double L = std::log(double(n)), T = std::log(L);
      double Q = std::exp(T * T), R = std::exp(L / (T * T));
      for (auto p : trial_factor_primes(n)) hit = hit || (Q < double(p) && double(p) < R);
    }
    oracle += hit ? 0 : std::abs(mobius_trial(n));
  }
  EXPECT_EQ(dist, oracle);
}

TEST(Restrict, Idempotent) {
  auto d = sieve_multiplicative(spec::divisor(), 5000);
  auto t = restrict(d);
  auto tt = restrict(t);
  EXPECT_EQ(*t.exact(), *tt.exact());
}

TEST(LrDistance, Basics) {
  auto mu = sieve_mobius(1000);
  EXPECT_EQ(lr_distance(mu, mu, 1.0, 1000), 0.0);
  auto t = restrict(mu);
  double v = lr_distance(mu, t, 1.0, 1000);
  std::int64_t cnt = 0;
  for (std::int64_t n = 1; n <= 1000; ++n) cnt += (*mu.exact_at(n) != *t.exact_at(n));
  EXPECT_DOUBLE_EQ(v, double(cnt) / 1000.0);
  EXPECT_GT(v, 0.0);
  auto d = sieve_multiplicative(spec::divisor(), 1000);
  auto dt = restrict(d);
  double s2 = 0;
  for (std::int64_t n = 1; n <= 1000; ++n) s2 += std::norm(d(n) - dt(n));
  EXPECT_NEAR(lr_distance(d, dt, 2.0, 1000), s2 / 1000.0, 1e-12);
  EXPECT_THROW(lr_distance(d, dt, 0.5, 1000), domain_error);
}

TEST(SwDecompose, Zero) {
  auto z = ArithSeq::zeros(1, 100);
  auto dec = sw_decompose(z);
  EXPECT_TRUE(dec.g1.is_zero());
  EXPECT_TRUE(dec.g2.is_zero());
}

TEST(SwDecompose, MobiusExact) {
  const std::uint64_t N = 1'000'000;
  auto mu = sieve_mobius(N);
  auto dec = sw_decompose(mu);
  for (std::uint64_t i = 0; i < N; ++i) {
    std::int64_t g = (*mu.exact())[i], a = (*dec.g1.exact())[i], b = (*dec.g2.exact())[i];
    ASSERT_EQ(a + b, g);
    ASSERT_LE(std::llabs(a), std::llabs(g));
    ASSERT_LE(std::llabs(b), std::llabs(g));
  }
}

TEST(SwDecompose, ComplexValued) {
  auto f = ArithSeq::tabulate(1, 300, [](std::int64_t n) { return e(0.1 * double(n)); });
  auto dec = sw_decompose(f);
  for (std::int64_t n = 1; n <= 300; ++n) {
    EXPECT_EQ(dec.g1(n) + dec.g2(n), f(n));
    EXPECT_LE(std::abs(dec.g1(n)), std::abs(f(n)));
    EXPECT_LE(std::abs(dec.g2(n)), std::abs(f(n)));
  }
}

TEST(SieveWeights, Level50) {
  auto w = sieve_weights(50, 3, 20);
  std::map<std::uint64_t, int> expected{{1, 1}, {5, -1}, {7, -1}, {35, 1}};
  EXPECT_EQ(w.weights, expected);
  EXPECT_EQ(w[1], 1);
  auto c = check_upper_bound(w, 10000);
  EXPECT_TRUE(c.ok);
  EXPECT_EQ(c.checked, 10000u);
  EXPECT_EQ(w.nu(11 * 13), 1);  // no weight divides
  EXPECT_EQ(w.nu(1), 1);
}

TEST(SieveWeights, MatchesDirectEnumeration) {
  for (auto [D, z1, z2, beta] : std::vector<std::tuple<std::int64_t, std::uint64_t, std::uint64_t, int>>{
           {50, 3, 20, 1}, {1000, 2, 30, 1}, {1000, 2, 30, 2}, {5000, 5, 60, 3}}) {
    auto w = sieve_weights(D, z1, z2, beta);
    std::map<std::uint64_t, int> direct;
    for (std::uint64_t r = 1; r <= std::uint64_t(D); ++r) {
      auto ps = trial_factor_primes(r);
      int mu = mobius_trial(r);
      if (mu == 0) continue;
      bool ok = true;
      for (auto p : ps) ok = ok && p > z1 && p < z2;
      std::sort(ps.rbegin(), ps.rend());
      long double prod = 1;
      for (std::size_t m = 0; m < ps.size() && ok; ++m) {
        prod *= ps[m];
        if (m % 2 == 0) ok = prod * std::pow((long double)ps[m], beta) < D;
      }
      if (ok) direct[r] = mu;
    }
    EXPECT_EQ(w.weights, direct) << D << " " << z1 << " " << z2 << " " << beta;
  }
}

TEST(SieveWeights, UpperBoundRandomParameters) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    std::uint64_t z1 = 2 + rng() % 10, z2 = z1 + 1 + rng() % 80;
    std::int64_t D = 1 + std::int64_t(rng() % 20000);
    auto w = sieve_weights(D, z1, z2, 1 + int(rng() % 3));
    auto c = check_upper_bound(w, 20000);
    ASSERT_TRUE(c.ok) << D << " " << z1 << " " << z2 << " at " << c.first_violation;
    for (const auto& [r, l] : w.weights) ASSERT_LE(r, std::uint64_t(D) > 1 ? std::uint64_t(D) : 1u);
  }
}

TEST(SieveWeights, Errors) {
  EXPECT_THROW(sieve_weights(0, 3, 20), domain_error);
  EXPECT_THROW(sieve_weights(50, 20, 3), domain_error);
  EXPECT_THROW(sieve_weights(50, 1, 3), domain_error);
  EXPECT_THROW(sieve_weights(std::int64_t(1) << 60, 2, 100000, 1), cost_error);
}

TEST(Ramare, WindowEmptyAtDeskScale) {
  auto r = ramare_decompose(spec::mobius(), 10000);
  EXPECT_TRUE(r.window.empty());
  EXPECT_TRUE(r.g_tilde.is_zero());
  EXPECT_TRUE(r.g_prime.is_zero());
  EXPECT_TRUE(r.error_support.empty());
  auto c = check_ramare(r);
  EXPECT_TRUE(c.identity_ok);
  EXPECT_TRUE(c.support_ok);
}

TEST(Ramare, ExplicitWindow) {
  for (auto g : {spec::mobius(), spec::divisor(), spec::liouville()}) {
    auto r = ramare_decompose(g, 10000, RestrictionWindow{3.0, 50.0});
    auto c = check_ramare(r);
    EXPECT_TRUE(c.identity_ok) << g.name << " first mismatch " << c.first_mismatch;
    EXPECT_TRUE(c.support_ok) << g.name;
    EXPECT_FALSE(r.error_support.empty());
    // single window prime, p not dividing m: g'(n) = g(p) g(m)
    EXPECT_EQ(r.g_prime(2 * 5).real(), r.g_tilde(10).real());
    EXPECT_EQ(r.g_prime(2 * 3).real(), 0.0);  // no window prime
  }
  auto r = ramare_decompose(spec::mobius(), 10000, RestrictionWindow{3.0, 50.0});
  EXPECT_GT(check_ramare(r).mismatches_on_support, 0u);
}

TEST(Bilinear, Trivial) {
  auto z = ArithSeq::zeros(60, 200);
  EXPECT_EQ(bilinear_phase_sum(z, z, {0.0, 0.3}, 10000).value, cplx{});
  auto one = ArithSeq::tabulate(60, 200, [](std::int64_t) { return cplx(1.0); });
  auto r = bilinear_phase_sum(one, one, {0.0, 0.0, 0.0}, 10000);
  std::int64_t cnt = 0;
  for (int a = 60; a <= 200; ++a)
    for (int b = 60; b <= 200; ++b) cnt += a * b <= 10000;
  EXPECT_EQ(r.value.real(), double(cnt));
  EXPECT_EQ(r.terms, std::uint64_t(cnt));
  // Q_{10^4} ~ 138.6, so no pair a, b >= Q has ab <= 10^4
  EXPECT_FALSE(r.hypothesis_ok);
  auto high = ArithSeq::tabulate(1400, 1500, [](std::int64_t) { return cplx(1.0); });
  auto h = bilinear_phase_sum(high, high, {0.0}, 2'200'000);
  EXPECT_TRUE(h.hypothesis_ok);  // Q ~ 1180
  EXPECT_EQ(h.value.real(), double(h.terms));
}

TEST(Bilinear, MatchesDirectSum) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> U(0, 1);
  auto a = ArithSeq::tabulate(50, 150, [&](std::int64_t) { return e(U(rng)); });
  auto b = ArithSeq::tabulate(50, 150, [&](std::int64_t) { return e(U(rng)); });
  std::vector<double> c{0.1, 0.37, 1e-5};
  auto r = bilinear_phase_sum(a, b, c, 9000);
  cplx s = 0;
  for (std::int64_t x = 50; x <= 150; ++x)
    for (std::int64_t y = 50; y <= 150; ++y)
      if (x * y <= 9000) {
        double n = double(x * y);
        s += a(x) * b(y) * e(std::fmod(c[0] + c[1] * n + std::fmod(c[2] * n * n, 1.0), 1.0));
      }
  EXPECT_LT(std::abs(r.value - s), 1e-9);
}

TEST(Bilinear, StructuredExceedsRandom) {
  const std::int64_t N = 10000;
  std::vector<double> c{0.0, 0.0, 1.0 / double(N * N)};
  auto one = ArithSeq::tabulate(50, 200, [](std::int64_t) { return cplx(1.0); });
  double structured = std::abs(bilinear_phase_sum(one, one, c, N).value);
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> rnd;
  for (int t = 0; t < 11; ++t) {
    auto a = ArithSeq::tabulate(50, 200, [&](std::int64_t) { return e(U(rng)); });
    auto b = ArithSeq::tabulate(50, 200, [&](std::int64_t) { return e(U(rng)); });
    rnd.push_back(std::abs(bilinear_phase_sum(a, b, c, N).value));
  }
  std::nth_element(rnd.begin(), rnd.begin() + 5, rnd.end());
  EXPECT_GT(structured / rnd[5], 5.0);
}
