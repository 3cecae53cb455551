#include "forensics/polling.hpp"

#include <algorithm>
#include <stdexcept>

#include "forensics/stats.hpp"

namespace forensics::polling {

std::string to_string(Tail t) {
  switch (t) {
    case Tail::ge: return "ge";
    case Tail::le: return "le";
    case Tail::two_sided: return "two_sided";
  }
  return "ge";
}

double binomial_tail_pvalue(int64_t k, int64_t m, double p, Tail direction) {
  if (m < 1) throw std::invalid_argument("binomial_tail_pvalue: sample size must be >= 1");
  if (k < 0 || k > m)
    throw std::invalid_argument("binomial_tail_pvalue: k must lie in [0, m]");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("binomial_tail_pvalue: p must lie in [0,1]");
  switch (direction) {
    case Tail::ge:
      return stats::binom_tail_ge(k, m, p);
    case Tail::le:
      return stats::binom_tail_le(k, m, p);
    case Tail::two_sided: {
      const double ge = stats::binom_tail_ge(k, m, p);
      const double le = stats::binom_tail_le(k, m, p);
      return std::min(1.0, 2.0 * std::min(ge, le));
    }
  }
  throw std::invalid_argument("binomial_tail_pvalue: unknown direction");
}

CenterPollResult center_poll_pvalue(const std::string& center_id, const std::string& pollster,
                                    int64_t sample_size, int64_t yes_responses,
                                    double official_share, Tail direction) {
  CenterPollResult res;
  res.center_id = center_id;
  res.pollster = pollster;
  res.sample_size = sample_size;
  res.yes_responses = yes_responses;
  res.official_share = official_share;
  res.direction = direction;
  res.p_value = binomial_tail_pvalue(yes_responses, sample_size, official_share, direction);
  res.small_sample = sample_size < 30;
  return res;
}

std::vector<CenterPollResult> exitpoll_test(const ElectionDataset& ds, Tail direction,
                                            const std::string& pollster, int64_t min_sample) {
  ensure_valid(ds);
  std::vector<CenterPollResult> out;
  for (const auto& poll : ds.polls) {
    if (!pollster.empty() && poll.pollster != pollster) continue;
    if (poll.sample_size < std::max<int64_t>(1, min_sample)) continue;
    out.push_back(center_poll_pvalue(poll.center_id, poll.pollster, poll.sample_size,
                                     poll.yes_responses, ds.official_yes_share, direction));
  }
  return out;
}

PollAggregate aggregate_poll_pvalues(std::span<const CenterPollResult> results,
                                     AggregateMethod method, double tau) {
  if (results.empty())
    throw std::invalid_argument("aggregate_poll_pvalues: no per-center results");
  PollAggregate agg;
  agg.method = method;
  agg.n = static_cast<int64_t>(results.size());
  agg.caveats = {"polls assumed to be simple random samples of voters",
                 "nonresponse and coverage error not modeled"};
  if (method == AggregateMethod::count_below) {
    if (!(tau > 0.0 && tau < 1.0))
      throw std::invalid_argument("aggregate_poll_pvalues: tau must lie in (0,1)");
    agg.tau = tau;
    for (const auto& r : results) {
      if (r.p_value < tau) ++agg.count_below;
    }
    agg.fraction_below = static_cast<double>(agg.count_below) / static_cast<double>(agg.n);
    agg.binomial_p = stats::binom_tail_ge(agg.count_below, agg.n, tau);
  } else {
    std::vector<double> ps;
    ps.reserve(results.size());
    for (const auto& r : results) ps.push_back(std::max(r.p_value, 1e-300));
    const auto fisher = stats::fisher_combine(ps);
    agg.fisher_statistic = fisher.statistic;
    agg.fisher_df = fisher.df;
    agg.fisher_p = fisher.p_value;
  }
  return agg;
}

}  // namespace forensics::polling
