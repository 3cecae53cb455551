#pragma once

// Within-center dispersion test. Conditional on a center's machine sizes and
// its total YES/NO/OUT counts, every assignment of ballots to machines is a
// permutation of the same card vector, so machine-level tallies follow a
// multivariate hypergeometric law. The test draws allocations by shuffling
// the card vector, computes a dispersion statistic, and reports the add-one
// Monte-Carlo p-value per center plus a Fisher combination across centers.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forensics/dataset.hpp"
#include "forensics/parallel.hpp"
#include "forensics/rng.hpp"

namespace forensics::permutation {

struct MachineCounts {
  int64_t nu = 0;
  int64_t yes = 0;
  int64_t no = 0;
  int64_t out = 0;
};

// A center reduced to what the conditional law needs.
struct CenterConfig {
  std::vector<int64_t> sizes;  // ballots per machine, all >= 1
  int64_t yes = 0;
  int64_t no = 0;
  int64_t out = 0;
};

enum class DispersionStat { yes_share_variance, max_abs_share_deviation, out_share_variance };

std::string to_string(DispersionStat s);

// One draw from the conditional law: shuffle the center's card vector and
// deal it into the machines in order.
std::vector<MachineCounts> sample_allocation(const CenterConfig& config, Rng& rng);

// Size-weighted dispersion of machine shares around the center share.
double dispersion_statistic(std::span<const MachineCounts> machines, DispersionStat stat);

struct CenterResult {
  std::string center_id;
  int64_t machines = 0;
  int64_t ballots = 0;
  double observed = 0.0;
  double p_value = 1.0;
};

struct Summary {
  int64_t centers_tested = 0;
  int64_t centers_excluded = 0;  // fewer than two machines with ballots
  std::vector<double> thresholds;
  std::vector<int64_t> counts_below;
  double fisher_statistic = 0.0;
  int fisher_df = 0;
  double fisher_p = 1.0;
  std::string assumption = "centers treated as independent";
};

struct Outcome {
  DispersionStat stat = DispersionStat::yes_share_variance;
  int64_t reps = 0;
  uint64_t seed = 0;
  std::vector<CenterResult> centers;
  Summary summary;
};

// Runs the per-center test over every center with at least two machines that
// recorded ballots. Each center's replicate stream is a pure function of
// (seed, center_id), so results do not depend on scheduling.
Outcome permutation_test(const ElectionDataset& ds, DispersionStat stat, int64_t reps,
                         uint64_t seed, std::span<const double> thresholds,
                         Exec exec = Exec::parallel);

}  // namespace forensics::permutation
