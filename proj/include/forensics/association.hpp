#pragma once

// Association between recorded YES shares and the two intent measurements:
// recall petition signature shares and exit poll shares. Correlations are
// reported with both a Fisher-z p-value and a permutation p-value, within
// caller-chosen center groupings. The residual test regresses each intent
// measurement on the recorded share and correlates the two residual vectors;
// a common shock to the recorded counts surfaces in both regressions while
// independent measurement noise does not.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "forensics/dataset.hpp"
#include "forensics/parallel.hpp"

namespace forensics::association {

enum class GroupingKind { none, signature_split, computerized_manual, size_quantiles };

std::string to_string(GroupingKind k);

struct GroupingSpec {
  GroupingKind kind = GroupingKind::none;
  // signature_split: split point on signature share; NaN means the median.
  double threshold = std::numeric_limits<double>::quiet_NaN();
  // size_quantiles: number of groups by registered voters.
  int quantiles = 3;
};

struct CorrelationResult {
  std::string group;
  int64_t n = 0;
  double r = 0.0;
  double fisher_z_p = 1.0;
  double perm_p = 1.0;
  int64_t reps = 0;
  bool testable = false;
  std::string note;  // reason when untestable
};

// Pearson correlation of YES share against signature share per group.
// Groups with fewer than 3 centers or a degenerate variable are reported
// untestable rather than dropped.
std::vector<CorrelationResult> signature_share_correlation(const ElectionDataset& ds,
                                                           const GroupingSpec& grouping,
                                                           int64_t reps, uint64_t seed);

struct ResidualCorrelationResult {
  int64_t n = 0;
  // Regression A: signature share on recorded YES share.
  double slope_a = 0.0, intercept_a = 0.0;
  // Regression B: pooled exit poll share on recorded YES share.
  double slope_b = 0.0, intercept_b = 0.0;
  double r = 0.0;          // Pearson correlation of the two residual vectors
  double fisher_z_p = 1.0;
  double perm_p = 1.0;
  int64_t reps = 0;
  bool testable = false;
  std::string note;
  std::vector<double> residuals_a;
  std::vector<double> residuals_b;
};

// Requires at least 10 centers carrying tallies, signatures, and a poll.
ResidualCorrelationResult residual_correlation_test(const ElectionDataset& ds, int64_t reps,
                                                    uint64_t seed);

struct CrossElectionEntry {
  std::string label;
  std::vector<CorrelationResult> groups;
  // Set when every testable group shows |r| at or above the flag threshold.
  bool high_correlation_in_all_groups = false;
};

struct CrossElectionResult {
  int64_t shared_centers = 0;
  double flag_threshold = 0.0;
  std::vector<CrossElectionEntry> elections;
};

// Signature correlation across elections over the centers they share. Group
// membership is fixed by the first dataset so the same physical centers are
// compared in every election.
CrossElectionResult cross_election_correlation(std::span<const ElectionDataset> datasets,
                                               const GroupingSpec& grouping, int64_t reps,
                                               uint64_t seed, double flag_threshold = 0.8);

}  // namespace forensics::association
