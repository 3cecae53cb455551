#pragma once

// Shared statistical primitives: special functions, exact binomial tails,
// simple regression, rank tests, and p-value combination. Everything is
// deterministic pure arithmetic; Monte-Carlo lives with the callers.

#include <cstdint>
#include <span>
#include <vector>

namespace forensics::stats {

// Lanczos approximation, accurate to ~1e-13 relative for x > 0.
double log_gamma(double x);

// Regularized incomplete gamma: lower P(a,x) and upper Q(a,x) = 1 - P(a,x).
double reg_gamma_p(double a, double x);
double reg_gamma_q(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, int df);

// Regularized incomplete beta I_x(a,b) via continued fraction.
double reg_beta(double a, double b, double x);

// Standard normal CDF and survival function.
double normal_cdf(double z);
double normal_sf(double z);

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

double log_binom_coeff(int64_t n, int64_t k);
double binom_log_pmf(int64_t k, int64_t n, double p);

// Exact binomial tails, P(X >= k) and P(X <= k) for X ~ Binomial(n, p).
// Summed in extended precision from the smaller end of the tail.
double binom_tail_ge(int64_t k, int64_t n, double p);
double binom_tail_le(int64_t k, int64_t n, double p);

// Equal-tail band for a Binomial(n, p) count at the given coverage:
// smallest [lo, hi] with P(X < lo) <= (1-coverage)/2 and P(X > hi) <= (1-coverage)/2.
struct CountBand {
  int64_t lo = 0;
  int64_t hi = 0;
};
CountBand binomial_band(int64_t n, double p, double coverage);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // population variance

// Pearson correlation. Throws if either side has zero variance or n < 2.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Two-sided p for an observed correlation via the Fisher z transform.
// Returns 1 when n <= 3 (the transform needs n - 3 > 0).
double fisher_z_p(double r, int64_t n);

// Ordinary least squares with intercept, one predictor.
struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;        // 0 when residual variance is 0 or n < 3
  double t_stat = 0.0;
  double p_two_sided = 1.0;     // t test on the slope, df = n - 2
  std::vector<double> residuals;
};
OlsFit ols_simple(std::span<const double> x, std::span<const double> y);

// Mann-Whitney rank-sum with mid-ranks for ties. Exact two-sided p-value by
// full distribution enumeration when there are no ties and n*m is small,
// otherwise a tie-corrected normal approximation.
struct RankSumTest {
  double u = 0.0;           // U statistic for the first sample
  double p_two_sided = 1.0;
  bool exact = false;
};
RankSumTest mann_whitney(std::span<const double> a, std::span<const double> b);

// Fisher's combination of independent p-values: -2 sum(log p) ~ chi2(2k).
struct FisherCombination {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};
FisherCombination fisher_combine(std::span<const double> p_values);

// Kolmogorov-Smirnov test of uniformity on [0,1].
struct KsTest {
  double d = 0.0;
  double p_value = 1.0;
};
KsTest ks_uniform(std::span<const double> values);

}  // namespace forensics::stats
