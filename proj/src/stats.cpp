#include "forensics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace forensics::stats {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Lentz's algorithm for the incomplete gamma continued fraction.
double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 1; i <= 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double log_gamma(double x) {
  if (x <= 0.0) throw std::invalid_argument("log_gamma: x must be positive");
  // Lanczos, g = 7, 9 coefficients.
  static const double coef[9] = {
      0.99999999999980993,   676.5203681218851,    -1259.1392167224028,
      771.32342877765313,    -176.61502916214059,  12.507343278686905,
      -0.13857109526572012,  9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection for small x.
    return std::log(kPi / std::sin(kPi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double sum = coef[0];
  for (int i = 1; i < 9; ++i) sum += coef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

double reg_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("reg_gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double reg_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("reg_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cf(a, x);
}

double chi_square_sf(double x, int df) {
  if (df <= 0) throw std::invalid_argument("chi_square_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return reg_gamma_q(0.5 * df, 0.5 * x);
}

double reg_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("reg_beta: a,b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
               b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double student_t_two_sided(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_two_sided: df must be positive");
  const double t2 = t * t;
  return reg_beta(0.5 * df, 0.5, df / (df + t2));
}

double log_binom_coeff(int64_t n, int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (k == 0 || k == n) return 0.0;
  return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
}

double binom_log_pmf(int64_t k, int64_t n, double p) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return log_binom_coeff(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
}

namespace {

// Tail sum k..n of the Binomial(n,p) pmf for k at or above the mean n*p.
// Starts at the boundary term -- the largest in this regime -- and walks up
// with the pmf ratio recurrence in long double, so a deep tail keeps the
// boundary term's relative accuracy instead of cancelling against 1.
long double binom_tail_upper(int64_t k, int64_t n, double p) {
  if (k <= 0) return 1.0L;
  if (k > n) return 0.0L;
  if (p <= 0.0) return 0.0L;   // k >= 1 here
  if (p >= 1.0) return 1.0L;
  const long double lp = static_cast<long double>(p);
  const long double lq = 1.0L - lp;
  long double term = std::exp(static_cast<long double>(binom_log_pmf(k, n, p)));
  long double sum = term;
  const int64_t mode = static_cast<int64_t>((static_cast<long double>(n) + 1.0L) * lp);
  for (int64_t j = k; j < n; ++j) {
    // pmf(j+1) = pmf(j) * (n-j)/(j+1) * p/q
    term *= static_cast<long double>(n - j) / static_cast<long double>(j + 1) * lp / lq;
    sum += term;
    // Past the mode the terms only decay; the rest of the tail is at most
    // (n - j) * term, far below one ulp of the running sum.
    if (j > mode && term < sum * 1e-30L) break;
  }
  if (sum > 1.0L) sum = 1.0L;
  return sum;
}

}  // namespace

double binom_tail_ge(int64_t k, int64_t n, double p) {
  if (n < 0) throw std::invalid_argument("binom_tail_ge: n must be nonnegative");
  // Use whichever tail is shorter for accuracy.
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (2 * k >= n) return static_cast<double>(binom_tail_upper(k, n, p));
  // P(X >= k) = 1 - P(X <= k-1) = 1 - P(Y >= n-k+1) with Y ~ Binomial(n, 1-p).
  return static_cast<double>(1.0L - binom_tail_upper(n - k + 1, n, 1.0 - p));
}

double binom_tail_le(int64_t k, int64_t n, double p) {
  if (n < 0) throw std::invalid_argument("binom_tail_le: n must be nonnegative");
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  // P(X <= k) = P(Y >= n-k) with Y ~ Binomial(n, 1-p).
  return binom_tail_ge(n - k, n, 1.0 - p);
}

CountBand binomial_band(int64_t n, double p, double coverage) {
  if (n <= 0 || coverage <= 0.0 || coverage >= 1.0)
    throw std::invalid_argument("binomial_band: bad arguments");
  const double tail = 0.5 * (1.0 - coverage);
  CountBand band;
  band.lo = 0;
  while (band.lo < n && binom_tail_le(band.lo, n, p) <= tail) ++band.lo;
  band.hi = n;
  while (band.hi > 0 && binom_tail_ge(band.hi, n, p) <= tail) --band.hi;
  return band;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size());
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson_r: need at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson_r: zero variance");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double fisher_z_p(double r, int64_t n) {
  if (n <= 3) return 1.0;
  const double rc = std::clamp(r, -0.999999999999, 0.999999999999);
  const double z = std::atanh(rc) * std::sqrt(static_cast<double>(n - 3));
  return 2.0 * normal_sf(std::fabs(z));
}

OlsFit ols_simple(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_simple: size mismatch");
  const size_t n = x.size();
  if (n < 2) throw std::invalid_argument("ols_simple: need at least 2 points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  OlsFit fit;
  if (sxx == 0.0) {
    // Degenerate predictor: flat fit through the mean.
    fit.slope = 0.0;
    fit.intercept = my;
  } else {
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
  }
  fit.residuals.resize(n);
  double rss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    rss += fit.residuals[i] * fit.residuals[i];
  }
  if (n > 2 && sxx > 0.0 && rss > 0.0) {
    fit.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    fit.t_stat = fit.slope / fit.slope_se;
    fit.p_two_sided = student_t_two_sided(fit.t_stat, static_cast<double>(n - 2));
  } else if (rss == 0.0 && fit.slope != 0.0) {
    // Exact linear relationship.
    fit.slope_se = 0.0;
    fit.t_stat = std::numeric_limits<double>::infinity();
    fit.p_two_sided = 0.0;
  } else {
    fit.slope_se = 0.0;
    fit.t_stat = 0.0;
    fit.p_two_sided = 1.0;
  }
  return fit;
}

namespace {

// Distribution of the Mann-Whitney U statistic under no ties: counts of
// arrangements with each U value, built by the standard recurrence over
// the second sample size. O(n*m*(n*m)) time, O(n*m) space.
std::vector<double> mw_u_distribution(int64_t n, int64_t m) {
  const int64_t umax = n * m;
  std::vector<double> count(static_cast<size_t>(umax) + 1, 0.0);
  count[0] = 1.0;
  // Gaussian binomial construction: multiply by (1 - q^(n+j))/(1 - q^j).
  for (int64_t j = 1; j <= m; ++j) {
    // Multiply by 1/(1 - q^j): prefix sums with stride j.
    for (int64_t u = j; u <= umax; ++u) count[u] += count[u - j];
    // Multiply by (1 - q^(n+j)).
    for (int64_t u = umax; u >= n + j; --u) count[u] -= count[u - (n + j)];
  }
  return count;
}

}  // namespace

RankSumTest mann_whitney(std::span<const double> a, std::span<const double> b) {
  const int64_t n = static_cast<int64_t>(a.size());
  const int64_t m = static_cast<int64_t>(b.size());
  if (n == 0 || m == 0) throw std::invalid_argument("mann_whitney: empty sample");

  struct Entry {
    double value;
    int group;
  };
  std::vector<Entry> all;
  all.reserve(static_cast<size_t>(n + m));
  for (double v : a) all.push_back({v, 0});
  for (double v : b) all.push_back({v, 1});
  std::sort(all.begin(), all.end(),
            [](const Entry& l, const Entry& r) { return l.value < r.value; });

  // Mid-ranks and tie bookkeeping.
  const size_t total = all.size();
  std::vector<double> rank(total);
  bool any_tie = false;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  size_t i = 0;
  while (i < total) {
    size_t j = i;
    while (j + 1 < total && all[j + 1].value == all[i].value) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) rank[k] = r;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1.0) {
      any_tie = true;
      tie_term += t * t * t - t;
    }
    i = j + 1;
  }

  double rank_sum_a = 0.0;
  for (size_t k = 0; k < total; ++k) {
    if (all[k].group == 0) rank_sum_a += rank[k];
  }
  RankSumTest out;
  out.u = rank_sum_a - 0.5 * static_cast<double>(n) * static_cast<double>(n + 1);

  const double nm = static_cast<double>(n) * static_cast<double>(m);
  if (!any_tie && nm <= 2500.0) {
    // Exact two-sided p by enumeration: 2 * min(P(U <= u), P(U >= u)), capped.
    const auto dist = mw_u_distribution(n, m);
    const double log_total = log_binom_coeff(n + m, n);
    const int64_t u_obs = static_cast<int64_t>(std::llround(out.u));
    long double below = 0.0L, above = 0.0L;
    for (int64_t u = 0; u < static_cast<int64_t>(dist.size()); ++u) {
      if (u <= u_obs) below += static_cast<long double>(dist[u]);
      if (u >= u_obs) above += static_cast<long double>(dist[u]);
    }
    const long double denom = std::exp(static_cast<long double>(log_total));
    const double p = static_cast<double>(2.0L * std::min(below, above) / denom);
    out.p_two_sided = std::min(1.0, p);
    out.exact = true;
    return out;
  }

  // Normal approximation with tie correction and continuity correction.
  const double mu = 0.5 * nm;
  const double nt = static_cast<double>(n + m);
  double sigma2 = nm / 12.0 * (nt + 1.0 - tie_term / (nt * (nt - 1.0)));
  if (sigma2 <= 0.0) {
    out.p_two_sided = 1.0;  // all values identical
    return out;
  }
  const double z = (std::fabs(out.u - mu) - 0.5) / std::sqrt(sigma2);
  out.p_two_sided = std::min(1.0, 2.0 * normal_sf(std::max(z, 0.0)));
  return out;
}

FisherCombination fisher_combine(std::span<const double> p_values) {
  if (p_values.empty()) throw std::invalid_argument("fisher_combine: no p-values");
  FisherCombination out;
  double acc = 0.0;
  for (double p : p_values) {
    if (p <= 0.0 || p > 1.0)
      throw std::invalid_argument("fisher_combine: p-values must be in (0,1]");
    acc += -2.0 * std::log(p);
  }
  out.statistic = acc;
  out.df = static_cast<int>(2 * p_values.size());
  out.p_value = chi_square_sf(acc, out.df);
  return out;
}

KsTest ks_uniform(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("ks_uniform: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double cdf = std::clamp(v[i], 0.0, 1.0);
    const double up = (static_cast<double>(i) + 1.0) / n - cdf;
    const double dn = cdf - static_cast<double>(i) / n;
    d = std::max({d, up, dn});
  }
  KsTest out;
  out.d = d;
  // Asymptotic Kolmogorov tail with the Stephens finite-n adjustment.
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::fabs(term) < 1e-12) break;
  }
  out.p_value = std::clamp(p, 0.0, 1.0);
  return out;
}

}  // namespace forensics::stats
