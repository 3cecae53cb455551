#pragma once

// Single-stage audit planning. The planner asks: how many precincts must a
// uniform without-replacement sample contain so that, if enough precincts were
// corrupted to overturn the margin, at least one lands in the sample with the
// target confidence. Corrupting a precinct shifts the margin by at most
// 2*lambda*ballots (a lambda fraction of its ballots flipped from winner to
// loser). Detection probabilities are computed exactly.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forensics/dataset.hpp"

namespace forensics::audit {

struct FlipBound {
  int64_t k = 0;                  // smallest number of precincts able to erase the margin
  bool audit_unnecessary = false; // even corrupting every precinct cannot erase it
};

// Greedy largest-first count of precincts whose combined influence
// sum(2*lambda*ballots) reaches the margin.
FlipBound min_flip_precincts(int64_t margin_votes, std::span<const int64_t> ballots,
                             double lambda);

// P(uniform n-subset of N precincts hits >= 1 of k tainted)
//   = 1 - C(N-k, n) / C(N, n)
double detection_probability(int64_t n_precincts, int64_t tainted, int64_t sample_size);

// Smallest n with detection_probability(N, k, n) >= confidence.
int64_t plan_sample_size(int64_t n_precincts, int64_t tainted, double confidence);

struct AuditPlan {
  int64_t precincts = 0;
  int64_t margin_votes = 0;
  double lambda = 1.0;
  double confidence = 0.0;
  int64_t min_flip = 0;
  bool audit_unnecessary = false;
  int64_t sample_size = 0;
  double detection = 0.0;
};

AuditPlan plan_audit(int64_t margin_votes, std::span<const int64_t> ballots, double lambda,
                     double confidence);

enum class Covariate { size, computerized, region, yes_share };

std::string to_string(Covariate c);

struct RandomnessResult {
  Covariate covariate = Covariate::size;
  bool categorical = false;
  int64_t n_audited = 0;    // audited centers carrying this covariate
  int64_t n_population = 0; // all centers carrying this covariate
  double observed = 0.0;    // |mean deviation| or chi-square distance
  double p_value = 1.0;
  int64_t reps = 0;
  bool testable = false;
  std::string note;
};

// Compares the audited subset against R equal-size uniform random subsets,
// one test per covariate. Numeric covariates use the absolute deviation of
// the subset mean from the population mean; categorical covariates use a
// chi-square distance between subset and population frequencies.
std::vector<RandomnessResult> sample_randomness_check(const ElectionDataset& ds,
                                                      std::span<const std::string> audited_ids,
                                                      std::span<const Covariate> covariates,
                                                      int64_t reps, uint64_t seed);

}  // namespace forensics::audit
