#pragma once

// Exit poll consistency. Under the null that a center's poll is a simple
// random sample of voters whose YES propensity equals the announced result,
// the YES response count is Binomial(m, official_share). Tails are summed
// exactly; no normal approximation at any sample size.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forensics/dataset.hpp"

namespace forensics::polling {

enum class Tail { ge, le, two_sided };

std::string to_string(Tail t);

struct CenterPollResult {
  std::string center_id;
  std::string pollster;
  int64_t sample_size = 0;
  int64_t yes_responses = 0;
  double official_share = 0.0;
  Tail direction = Tail::ge;
  double p_value = 1.0;
  bool small_sample = false;  // m below 30, flagged not suppressed
};

// Exact binomial tail p-value for one poll sample.
// ge: P(X >= k), le: P(X <= k), two_sided: min(1, 2 * min(ge, le)).
double binomial_tail_pvalue(int64_t k, int64_t m, double p, Tail direction);

CenterPollResult center_poll_pvalue(const std::string& center_id, const std::string& pollster,
                                    int64_t sample_size, int64_t yes_responses,
                                    double official_share, Tail direction);

// Every poll sample in the dataset against the dataset's official share.
// `pollster` filters to one house when non-empty; `min_sample` drops samples
// below the floor (0 keeps everything).
std::vector<CenterPollResult> exitpoll_test(const ElectionDataset& ds, Tail direction,
                                            const std::string& pollster = "",
                                            int64_t min_sample = 0);

enum class AggregateMethod { count_below, fisher };

struct PollAggregate {
  AggregateMethod method = AggregateMethod::count_below;
  int64_t n = 0;
  // count_below fields
  double tau = 0.0;
  int64_t count_below = 0;
  double fraction_below = 0.0;
  double binomial_p = 1.0;  // exact P(Binomial(n, tau) >= count) under uniform nulls
  // fisher fields
  double fisher_statistic = 0.0;
  int fisher_df = 0;
  double fisher_p = 1.0;
  std::vector<std::string> caveats;
};

// Combines per-center poll p-values. caveats always states the SRS and
// nonresponse assumptions; conclusions stay with the reader.
PollAggregate aggregate_poll_pvalues(std::span<const CenterPollResult> results,
                                     AggregateMethod method, double tau = 0.02);

}  // namespace forensics::polling
