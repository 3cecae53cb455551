#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "forensics/rng.hpp"
#include "forensics/stats.hpp"

using namespace forensics;

namespace {

// Exact binomial tail by long-double pmf recursion, summed from the smaller
// end. Independent of the library's incomplete-beta route.
long double tail_ge_oracle(int64_t k, int64_t n, double p) {
  if (k <= 0) return 1.0L;
  if (k > n) return 0.0L;
  const long double lp = static_cast<long double>(p);
  std::vector<long double> pmf(static_cast<size_t>(n) + 1);
  // log start then renormalized multiplicative recursion for stability
  long double log0 = static_cast<long double>(n) * std::log(1.0L - lp);
  pmf[0] = std::exp(log0);
  for (int64_t i = 0; i < n; ++i)
    pmf[static_cast<size_t>(i) + 1] = pmf[static_cast<size_t>(i)] *
                                      static_cast<long double>(n - i) /
                                      static_cast<long double>(i + 1) * lp / (1.0L - lp);
  long double ge = 0.0L, le = 0.0L;
  for (int64_t i = n; i >= k; --i) ge += pmf[static_cast<size_t>(i)];
  for (int64_t i = 0; i < k; ++i) le += pmf[static_cast<size_t>(i)];
  // Sum whichever tail is smaller and complement, to keep 1e-15 accuracy.
  return ge <= le ? ge : 1.0L - le;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("log_gamma matches lgamma to 1e-13 relative") {
    for (double x : {0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 55.5, 171.0, 1000.0}) {
      const double got = stats::log_gamma(x);
      const double want = std::lgamma(x);
      CHECK(std::fabs(got - want) <= 1e-13 * std::max(1.0, std::fabs(want)));
    }
  }

  TEST_CASE("regularized gamma halves sum to one") {
    for (double a : {0.5, 1.0, 3.0, 25.0, 200.0}) {
      for (double x : {0.1, 1.0, 5.0, 30.0, 250.0}) {
        CHECK(stats::reg_gamma_p(a, x) + stats::reg_gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("chi-square survival matches the closed form at df=2") {
    // With two degrees of freedom the tail is exp(-x/2).
    for (double x : {0.0, 0.5, 1.0, 4.0, 10.0, 40.0}) {
      CHECK(stats::chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
    }
    CHECK(stats::chi_square_sf(0.0, 7) == doctest::Approx(1.0));
  }

  TEST_CASE("incomplete beta basics") {
    for (double x : {0.0, 0.25, 0.5, 0.9, 1.0})
      CHECK(stats::reg_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(stats::reg_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    // Reflection identity.
    CHECK(stats::reg_beta(3.0, 7.0, 0.2) ==
          doctest::Approx(1.0 - stats::reg_beta(7.0, 3.0, 0.8)).epsilon(1e-12));
  }

  TEST_CASE("normal cdf and sf") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-10));
    for (double z : {-3.0, -0.7, 0.0, 1.3, 4.2})
      CHECK(stats::normal_cdf(z) + stats::normal_sf(z) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("student t two-sided matches the Cauchy closed form at df=1") {
    for (double t : {0.0, 0.5, 1.0, 3.0, 12.0}) {
      const double want = 1.0 - 2.0 * std::atan(t) / 3.14159265358979323846;
      CHECK(stats::student_t_two_sided(t, 1.0) == doctest::Approx(want).epsilon(1e-10));
      CHECK(stats::student_t_two_sided(-t, 1.0) ==
            doctest::Approx(stats::student_t_two_sided(t, 1.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("binomial tails: boundaries and complements") {
    CHECK(stats::binom_tail_ge(0, 10, 0.3) == doctest::Approx(1.0));
    CHECK(stats::binom_tail_le(10, 10, 0.3) == doctest::Approx(1.0));
    for (int64_t k : {1, 3, 7, 10}) {
      CHECK(stats::binom_tail_ge(k, 10, 0.3) + stats::binom_tail_le(k - 1, 10, 0.3) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("binomial tails match the long-double oracle to 1e-12 relative") {
    for (int64_t n : {5, 30, 100, 450, 1000}) {
      for (double p : {0.02, 0.41, 0.5, 0.93}) {
        for (int64_t k : {int64_t{1}, n / 4, n / 2, (3 * n) / 4, n}) {
          const long double want = tail_ge_oracle(k, n, p);
          const double got = stats::binom_tail_ge(k, n, p);
          CHECK(std::fabs(got - static_cast<double>(want)) <=
                1e-12 * std::max(1e-30, static_cast<double>(want)));
        }
      }
    }
  }

  TEST_CASE("binomial band is the tightest equal-tail interval") {
    const std::tuple<int64_t, double, double> cases[] = {
        {200, 0.05, 0.99}, {200, 0.01, 0.99}, {100, 0.5, 0.95}, {50, 0.02, 0.99}};
    for (auto [n, p, cov] : cases) {
      const auto band = stats::binomial_band(n, p, cov);
      const double half = (1.0 - cov) / 2.0;
      if (band.lo > 0) {
        CHECK(stats::binom_tail_le(band.lo - 1, n, p) <= half + 1e-12);
        CHECK(stats::binom_tail_le(band.lo, n, p) > half);
      }
      if (band.hi < n) {
        CHECK(stats::binom_tail_ge(band.hi + 1, n, p) <= half + 1e-12);
        CHECK(stats::binom_tail_ge(band.hi, n, p) > half);
      }
      CHECK(band.lo <= band.hi);
    }
    // The acceptance bands, pinned: 200 draws at 5% and 1%.
    CHECK(stats::binomial_band(200, 0.05, 0.99).lo == 3);
    CHECK(stats::binomial_band(200, 0.05, 0.99).hi == 19);
    CHECK(stats::binomial_band(200, 0.01, 0.99).lo == 0);
    CHECK(stats::binomial_band(200, 0.01, 0.99).hi == 6);
  }

  TEST_CASE("mean, variance, pearson") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(stats::mean(v) == doctest::Approx(2.5));
    CHECK(stats::variance(v) == doctest::Approx(1.25));  // population variance
    std::vector<double> x{0.0, 1.0, 2.0, 3.0}, y{5.0, 7.0, 9.0, 11.0};
    CHECK(stats::pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> constant{2.0, 2.0, 2.0, 2.0};
    CHECK_THROWS_AS((void)stats::pearson_r(x, constant), std::invalid_argument);
  }

  TEST_CASE("simple OLS recovers an exact line and a hand-checked fit") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> yline;
    for (double v : x) yline.push_back(2.0 * v + 1.0);
    auto fit = stats::ols_simple(x, yline);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-13));
    for (double r : fit.residuals) CHECK(std::fabs(r) < 1e-12);

    // y = {1,2,2,3} on x = {1,2,3,4}, hand solved: slope 0.6, intercept 0.5,
    // residual SS = 0.2, se(slope) = sqrt((0.2/2)/5).
    std::vector<double> x2{1.0, 2.0, 3.0, 4.0}, y2{1.0, 2.0, 2.0, 3.0};
    auto fit2 = stats::ols_simple(x2, y2);
    CHECK(fit2.slope == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(fit2.intercept == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit2.slope_se == doctest::Approx(std::sqrt((0.2 / 2.0) / 5.0)).epsilon(1e-10));
  }

  TEST_CASE("rank-sum: strict separation of 10 vs 10 gives the minimal exact p") {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
      a.push_back(static_cast<double>(i));
      b.push_back(static_cast<double>(100 + i));
    }
    auto res = stats::mann_whitney(a, b);
    CHECK(res.exact);
    CHECK(res.u == doctest::Approx(0.0));
    CHECK(res.p_two_sided == doctest::Approx(2.0 / 184756.0).epsilon(1e-12));
    // U statistics of the two orientations sum to n*m.
    auto swapped = stats::mann_whitney(b, a);
    CHECK(res.u + swapped.u == doctest::Approx(100.0));
    CHECK(swapped.p_two_sided == doctest::Approx(res.p_two_sided).epsilon(1e-12));
  }

  TEST_CASE("rank-sum handles ties with mid-ranks") {
    std::vector<double> a{1.0, 1.0, 2.0}, b{1.0, 2.0, 2.0};
    auto res = stats::mann_whitney(a, b);
    CHECK_FALSE(res.exact);  // ties force the corrected normal path
    CHECK(res.p_two_sided > 0.0);
    CHECK(res.p_two_sided <= 1.0);
    std::vector<double> same{3.0, 3.0}, same2{3.0, 3.0};
    CHECK(stats::mann_whitney(same, same2).p_two_sided == doctest::Approx(1.0));
  }

  TEST_CASE("fisher combination of one p-value is that p-value") {
    for (double p : {0.001, 0.2, 0.5, 0.97, 1.0}) {
      std::vector<double> in{p};
      auto res = stats::fisher_combine(in);
      CHECK(res.df == 2);
      CHECK(res.p_value == doctest::Approx(p).epsilon(1e-10));
    }
    std::vector<double> bad{0.0};
    CHECK_THROWS_AS((void)stats::fisher_combine(bad), std::invalid_argument);
  }

  TEST_CASE("KS statistic on a known sample, p monotone in d") {
    std::vector<double> one{0.9};
    auto res = stats::ks_uniform(one);
    CHECK(res.d == doctest::Approx(0.9));
    std::vector<double> mid{0.5};
    CHECK(stats::ks_uniform(mid).d == doctest::Approx(0.5));
    CHECK(stats::ks_uniform(mid).p_value > res.p_value);
  }

  TEST_CASE("KS level is close to nominal on uniform samples") {
    Rng rng(20260817);
    int64_t rejections = 0;
    const int64_t reps = 2000;
    for (int64_t rep = 0; rep < reps; ++rep) {
      std::vector<double> v(100);
      for (auto& x : v) x = rng.next_double();
      if (stats::ks_uniform(v).p_value < 0.01) ++rejections;
    }
    // 99% binomial band for 2000 trials at 1%, padded for the asymptotic tail.
    CHECK(rejections >= 5);
    CHECK(rejections <= 40);
  }
}
