#include "forensics/digits.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "forensics/rng.hpp"
#include "forensics/stats.hpp"

namespace forensics::digits {

DigitDistribution reference_digit_law(int position) {
  if (position != 1 && position != 2)
    throw std::invalid_argument("reference_digit_law: position must be 1 or 2");
  DigitDistribution dist;
  dist.position = position;
  dist.kind = DistKind::theoretical;
  if (position == 1) {
    dist.weights.resize(9);
    for (int d = 1; d <= 9; ++d)
      dist.weights[d - 1] = std::log10(1.0 + 1.0 / d);
  } else {
    dist.weights.assign(10, 0.0);
    for (int d = 0; d <= 9; ++d) {
      double w = 0.0;
      for (int lead = 1; lead <= 9; ++lead)
        w += std::log10(1.0 + 1.0 / (10.0 * lead + d));
      dist.weights[d] = w;
    }
  }
  return dist;
}

int significant_digit(int64_t value, int position) {
  if (value <= 0) return -1;
  int ndigits = 0;
  for (int64_t v = value; v > 0; v /= 10) ++ndigits;
  if (ndigits < position) return -1;
  int64_t v = value;
  for (int i = 0; i < ndigits - position; ++i) v /= 10;
  return static_cast<int>(v % 10);
}

DigitDistribution digit_histogram(std::span<const int64_t> values, int position) {
  if (position != 1 && position != 2)
    throw std::invalid_argument("digit_histogram: position must be 1 or 2");
  if (values.empty()) throw std::invalid_argument("digit_histogram: no values");
  const int k = support_size(position);
  std::vector<int64_t> counts(k, 0);
  int64_t kept = 0, dropped = 0;
  for (int64_t v : values) {
    const int d = significant_digit(v, position);
    if (d < 0) {
      ++dropped;
      continue;
    }
    ++counts[position == 1 ? d - 1 : d];
    ++kept;
  }
  if (kept == 0)
    throw std::invalid_argument("digit_histogram: no value has enough significant digits");
  DigitDistribution dist;
  dist.position = position;
  dist.kind = DistKind::observed;
  dist.sample_size = kept;
  dist.dropped = dropped;
  dist.counts = counts;
  dist.weights.resize(k);
  for (int i = 0; i < k; ++i)
    dist.weights[i] = static_cast<double>(counts[i]) / static_cast<double>(kept);
  return dist;
}

DigitTestResult digit_test(const DigitDistribution& observed,
                           const DigitDistribution& expected) {
  if (observed.position != expected.position)
    throw std::invalid_argument("digit_test: position mismatch");
  if (observed.kind != DistKind::observed || observed.sample_size <= 0)
    throw std::invalid_argument("digit_test: first argument must be an observed histogram");
  const int k = support_size(observed.position);
  if (static_cast<int>(observed.weights.size()) != k ||
      static_cast<int>(expected.weights.size()) != k)
    throw std::invalid_argument("digit_test: wrong support size");
  for (double w : expected.weights)
    if (!(w > 0.0))
      throw std::invalid_argument("digit_test: expected distribution has a zero cell");

  const double n = static_cast<double>(observed.sample_size);
  DigitTestResult res;
  res.sample_size = observed.sample_size;
  res.df = k - 1;

  const bool have_counts = static_cast<int>(observed.counts.size()) == k;
  double chi = 0.0;
  double log_null = 0.0;  // log-likelihood under the expected law
  double log_sat = 0.0;   // log-likelihood under the saturated multinomial
  bool low_info = false;
  for (int i = 0; i < k; ++i) {
    const double obs_count =
        have_counts ? static_cast<double>(observed.counts[i]) : observed.weights[i] * n;
    const double exp_count = expected.weights[i] * n;
    if (exp_count < 5.0) low_info = true;
    const double diff = obs_count - exp_count;
    chi += diff * diff / exp_count;
    log_null += obs_count * std::log(expected.weights[i]);
    if (obs_count > 0.0) log_sat += obs_count * std::log(obs_count / n);
  }
  res.chi_square = chi;
  res.p_value = stats::chi_square_sf(chi, res.df);
  // BIC approximation: the saturated model spends k-1 extra parameters.
  res.log_bayes_factor = log_null - log_sat + 0.5 * (k - 1) * std::log(n);
  res.low_information = low_info;
  return res;
}

double bayes_factor_digit_test(const DigitDistribution& observed,
                               const DigitDistribution& expected) {
  return digit_test(observed, expected).log_bayes_factor;
}

std::string to_string(BoundedModel m) {
  return m == BoundedModel::uniform_0_cap ? "UNIFORM_0_CAP" : "BINOMIAL";
}

DigitDistribution bounded_reference_pmf(int64_t cap, BoundedModel model, double binom_p,
                                        int64_t reps, uint64_t seed, Exec exec) {
  if (cap < 10)
    throw std::invalid_argument("bounded_reference_pmf: cap must be at least 10");
  if (reps < 10000)
    throw std::invalid_argument("bounded_reference_pmf: need at least 10000 draws");
  if (model == BoundedModel::binomial && !(binom_p > 0.0 && binom_p < 1.0))
    throw std::invalid_argument("bounded_reference_pmf: binomial p must be in (0,1)");

  // Fixed shard count: the shard layout (and so the result) is independent
  // of how many workers execute the loop.
  constexpr int64_t kShards = 64;
  std::array<std::array<int64_t, 10>, kShards> counts{};
  std::array<int64_t, kShards> dropped{};

  par_for(kShards, exec, [&](int64_t shard) {
    Rng rng(substream(seed, "bounded_reference", static_cast<uint64_t>(shard)));
    const int64_t lo = shard * reps / kShards;
    const int64_t hi = (shard + 1) * reps / kShards;
    auto& local = counts[shard];
    int64_t local_dropped = 0;
    for (int64_t i = lo; i < hi; ++i) {
      int64_t value = 0;
      if (model == BoundedModel::uniform_0_cap) {
        value = static_cast<int64_t>(rng.bounded(static_cast<uint64_t>(cap) + 1));
      } else {
        value = rng.binomial(cap, binom_p);
      }
      const int d = significant_digit(value, 2);
      if (d < 0) {
        ++local_dropped;
        continue;
      }
      ++local[d];
    }
    dropped[shard] = local_dropped;
  });

  std::array<int64_t, 10> total{};
  int64_t total_dropped = 0;
  for (int64_t s = 0; s < kShards; ++s) {
    for (int d = 0; d < 10; ++d) total[d] += counts[s][d];
    total_dropped += dropped[s];
  }
  const int64_t kept = reps - total_dropped;
  if (kept <= 0)
    throw std::invalid_argument("bounded_reference_pmf: all draws lacked a second digit");

  DigitDistribution dist;
  dist.position = 2;
  dist.kind = DistKind::simulated;
  dist.sample_size = kept;
  dist.dropped = total_dropped;
  dist.counts.assign(total.begin(), total.end());
  dist.weights.resize(10);
  for (int d = 0; d < 10; ++d)
    dist.weights[d] = static_cast<double>(total[d]) / static_cast<double>(kept);
  return dist;
}

}  // namespace forensics::digits
